"""Command-line entry point: ``covertime {estimate,partition,simulate,verify,generate}``.

Exit codes: 0 success, 1 a ``verify`` check failed, 2 bad input, 3 the
input lies outside the regime an estimate needs.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Any, Sequence

import numpy as np

from . import __version__
from .collapsed import build_collapsed, collapsed_conductance_bound
from .errors import InputError, RegimeError
from .estimator import EstimatorConfig, estimate, solve_tstar, F, Fprime
from .graph import Graph, format_edge_list, min_degree_ratio, parse_generator_spec, read_edge_list
from .markov import XI_CONST, build_chain, exact_mixing_time, first_visit_oracle
from .params import default_omega, default_zeta
from .partition import partition, verify_partition
from .spectral import BRUTE_FORCE_MAX_N, best_cut, second_eigenpair
from .walker import WalkConfig, simulate_cover, write_trials_csv

THREADS_ENV = "COVERTIME_THREADS"


def _threads(value: int | None) -> int:
    if value is not None:
        return max(1, value)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _load_graph(args: argparse.Namespace) -> Graph:
    if args.generate and args.graph:
        raise InputError("give either an edge-list path or --generate, not both")
    if args.generate:
        return parse_generator_spec(args.generate, seed=args.seed)
    if args.graph:
        try:
            return read_edge_list(args.graph)
        except OSError as exc:
            raise InputError(f"cannot read {args.graph}: {exc.strerror}") from None
    raise InputError("no graph given: pass an edge-list path or --generate SPEC")


def _run_config(args: argparse.Namespace, g: Graph, **extra: Any) -> dict:
    theta = min_degree_ratio(g).theta
    cfg = {
        "command": args.command,
        "input": args.graph,
        "generate": args.generate,
        "n": g.n,
        "m": g.m,
        "theta": theta,
        "zeta": args.zeta if args.zeta is not None else default_zeta(g.n, theta),
        "omega": args.omega if args.omega is not None else default_omega(g.n, theta),
        "ratio_floor": args.ratio_floor,
        "cut_mode": args.cut_mode,
        "seed": args.seed,
        "trials": args.trials,
        "threads": _threads(args.threads),
        "format": args.format,
    }
    if g.labels and list(g.labels) != list(range(g.n)):
        cfg["labels"] = list(g.labels)
    cfg.update(extra)
    return cfg


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def _emit(payload: dict, fmt: str, out) -> None:
    if fmt == "json":
        json.dump(_jsonable(payload), out, indent=2)
        out.write("\n")
        return
    for key, value in payload.items():
        if isinstance(value, dict):
            out.write(f"{key}:\n")
            for k, v in value.items():
                out.write(f"  {k:<24} {_short(v)}\n")
        else:
            out.write(f"{key:<26} {_short(value)}\n")


def _short(v: Any) -> str:
    text = json.dumps(_jsonable(v)) if isinstance(v, (dict, list, tuple)) else str(v)
    return text if len(text) <= 100 else text[:97] + "..."


# -- commands ---------------------------------------------------------------


def cmd_estimate(args: argparse.Namespace, out) -> int:
    g = _load_graph(args)
    run = _run_config(args, g)
    cfg = EstimatorConfig(
        zeta=run["zeta"],
        omega=run["omega"],
        ratio_floor=args.ratio_floor,
        cut_mode=args.cut_mode,
        seed=args.seed,
        kappa_trials=args.trials,
        workers=run["threads"],
    )
    report = estimate(g, cfg).to_dict()
    report["run_config"] = run
    if args.format == "table":
        summary = {k: report[k] for k in ("tier", "point_estimate", "lower", "upper")}
        summary["fallthrough"] = [f"{f['tier']}: {f['reason']}" for f in report["fallthrough"]]
        summary["blocks"] = [{"size": len(b["vertices"]), "C_i": b["C_i"], "pi_i": b["pi_i"]} for b in report["blocks"]]
        summary["run_config"] = run
        _emit(summary, "table", out)
    else:
        _emit(report, "json", out)
    return 0


def cmd_partition(args: argparse.Namespace, out) -> int:
    g = _load_graph(args)
    run = _run_config(args, g)
    p = partition(g, run["zeta"], args.cut_mode)
    report = verify_partition(g, p)
    payload = {
        "partition": p.to_dict(),
        "verified": report.ok,
        "failed_checks": [c.name for c in report.failed()],
        "run_config": run,
    }
    if args.dump_collapsed:
        chain = build_chain(g)
        dump = []
        for block in p.blocks:
            cc = build_collapsed(chain, block)
            entry = cc.to_dict()
            entry["rho"] = cc.rho.tolist()
            dump.append(entry)
        with open(args.dump_collapsed, "w", encoding="utf-8") as fh:
            json.dump(dump, fh)
        payload["collapsed_dump"] = args.dump_collapsed
    _emit(payload, args.format, out)
    return 0


def cmd_simulate(args: argparse.Namespace, out) -> int:
    g = _load_graph(args)
    if not 0 <= args.start < g.n:
        raise InputError(f"--start {args.start} is not a vertex index in [0, {g.n})")
    cfg = WalkConfig(
        seed=args.seed, lazy=args.lazy, max_steps=args.max_steps, trials=args.trials, workers=_threads(args.threads)
    )
    run = _run_config(args, g, start=args.start, lazy=args.lazy, max_steps=cfg.resolved_max_steps(g))
    stats = simulate_cover(g, args.start, cfg)
    if args.dump_csv:
        write_trials_csv(stats, args.dump_csv)
    _emit({"cover_time": stats.summary(), "run_config": run}, args.format, out)
    return 0


def _check(name: str, passed: bool, detail: str = "") -> dict:
    return {"name": name, "passed": bool(passed), "detail": detail}


def verify_checks(g: Graph, zeta: float, omega: float, cut_mode: str = "auto", deep: bool = False) -> list[dict]:
    """The invariant battery behind ``covertime verify``."""
    checks: list[dict] = []
    theta = min_degree_ratio(g).theta
    n = g.n
    c = build_chain(g)
    checks.append(_check("chain.row_sums", c.row_sum_residual() <= 1e-12, f"{c.row_sum_residual():.2e}"))
    checks.append(_check("chain.stationary", c.stationarity_residual() <= 1e-10, f"{c.stationarity_residual():.2e}"))
    checks.append(_check("chain.reversible", c.reversibility_residual() <= 1e-12, f"{c.reversibility_residual():.2e}"))

    lam, f = second_eigenpair(g)
    ortho = abs(float(np.sum(c.pi * f)))
    checks.append(_check("spectral.orthogonal", ortho <= 1e-12, f"<f,1>_pi = {ortho:.2e}, lambda2 = {lam:.6f}"))
    found = best_cut(g, cut_mode)
    if n <= BRUTE_FORCE_MAX_N:
        exact = best_cut(g, "brute_force").cut.conductance
        sweep = best_cut(g, "sweep").cut.conductance
        checks.append(_check("spectral.sweep_vs_exact", sweep >= exact - 1e-12, f"sweep {sweep:.6g} vs exact {exact:.6g}"))

    ts = solve_tstar(c.pi)
    checks.append(
        _check("tstar.root", abs(Fprime(ts.value, c.pi) + 1.0) <= 1e-10, f"F'(t*) = {Fprime(ts.value, c.pi):.12f}")
    )
    lo, hi = n * math.log(n), n * math.log(n) / theta
    checks.append(_check("tstar.bracket", lo * (1 - 1e-12) <= ts.value <= hi * (1 + 1e-12), f"{lo:.4f} <= {ts.value:.4f} <= {hi:.4f}"))
    ratio = F(ts.value, c.pi) / ts.value
    checks.append(_check("tstar.F_ratio", ratio <= 1.0 / (theta * math.log(n)), f"F(t*)/t* = {ratio:.4g}"))

    T = exact_mixing_time(c, omega)
    at, before = c.relative_distance(T), c.relative_distance(T - 1) if T else math.inf
    checks.append(_check("mixing.exact", at <= 1 / omega < before, f"T = {T}, d(T) = {at:.4g}, d(T-1) = {before:.4g}"))

    p = partition(g, zeta, cut_mode)
    report = verify_partition(g, p)
    for chk in report.checks:
        if not chk.passed:
            checks.append(_check(f"partition.{chk.name}", not chk.fatal, chk.detail))
    checks.append(_check("partition.all", report.ok, f"{p.s} blocks, {len(report.checks)} checks"))

    if p.s > 1:
        for i, block in enumerate(p.blocks):
            cc = build_collapsed(c, block)
            for label, value in (
                ("row_sums", cc.row_sum_residual()),
                ("exit_mass", cc.exit_mass_residual()),
                ("detailed_balance", cc.detailed_balance_residual()),
                ("stationary", cc.stationarity_residual()),
            ):
                checks.append(_check(f"collapsed[{i}].{label}", value <= 1e-10, f"{value:.2e}"))
            if deep:
                cond = collapsed_conductance_bound(cc, g, cut_mode)
                if cond.exact is not None:
                    checks.append(
                        _check(f"collapsed[{i}].conductance_bound", cond.bound <= cond.exact, f"{cond.bound:.4g} <= {cond.exact:.4g}")
                    )

    if deep:
        if n > 40:
            checks.append(_check("first_visit.oracle", True, "skipped: exact oracle limited to n <= 40"))
        elif found.cut.conductance < zeta:
            checks.append(_check("first_visit.oracle", True, "skipped: conductance below zeta, estimate not applicable"))
        else:
            o = first_visit_oracle(c, omega)
            checks.append(
                _check(
                    "first_visit.oracle",
                    o.max_relative_error <= XI_CONST / omega,
                    f"max rel err {o.max_relative_error:.4g} vs {XI_CONST:g}/omega = {XI_CONST / omega:.4g} at (u,v,t) = {o.worst}",
                )
            )
        pk = np.linalg.matrix_power(c.P, 4)
        checks.append(_check("chain.squaring", np.max(np.abs(c.square(2) - pk)) <= 1e-9, "P^4 by squaring vs iteration"))
    checks.append(_check("conductance.found", found.cut.conductance > 0, f"{found.method}: {found.cut.conductance:.6g}"))
    return checks


def cmd_verify(args: argparse.Namespace, out) -> int:
    g = _load_graph(args)
    run = _run_config(args, g, deep=args.deep)
    checks = verify_checks(g, run["zeta"], run["omega"], args.cut_mode, args.deep)
    ok = all(ch["passed"] for ch in checks)
    if args.format == "json":
        _emit({"ok": ok, "checks": checks, "run_config": run}, "json", out)
    else:
        for ch in checks:
            out.write(f"{'PASS' if ch['passed'] else 'FAIL'}  {ch['name']:<36} {ch['detail']}\n")
        out.write(f"{'ok' if ok else 'FAILED'}: {sum(ch['passed'] for ch in checks)}/{len(checks)} checks passed\n")
    return 0 if ok else 1


def cmd_generate(args: argparse.Namespace, out) -> int:
    g = parse_generator_spec(args.spec, seed=args.seed)
    text = f"# {args.spec} seed={args.seed} n={g.n} m={g.m}\n" + format_edge_list(g)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)
    return 0


# -- argument parsing -------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("graph", nargs="?", help="edge-list file (one 'u v' pair per line)")
    p.add_argument("--generate", metavar="SPEC", help="generator spec, e.g. complete:50 or dumbbell:100:1")
    p.add_argument("--zeta", type=float, help="block conductance threshold (default max(n^(-theta psi), 0.05))")
    p.add_argument("--omega", type=float, help="mixing accuracy (default max(n^(3 theta psi), 10))")
    p.add_argument("--ratio-floor", type=float, default=4.0, help="tier-2 requires T_mix <= 2C/ratio_floor")
    p.add_argument("--cut-mode", choices=("auto", "sweep", "brute_force"), default="auto")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--format", choices=("json", "table"), default="json")
    p.add_argument("--threads", type=int, help=f"worker threads (fallback: ${THREADS_ENV}, then CPU count)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="covertime", description="Cover-time estimation for dense graphs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="tiered cover-time estimate")
    _common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("partition", help="partition into high-conductance blocks")
    _common(p)
    p.add_argument("--dump-collapsed", metavar="FILE", help="write per-block collapsed chains as JSON")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("simulate", help="Monte Carlo cover times")
    _common(p)
    p.add_argument("--start", type=int, default=0, help="start vertex index")
    p.add_argument("--lazy", action="store_true", help="simulate the lazy walk")
    p.add_argument("--max-steps", type=int, help="per-trial step cap (default 50 n ln n / theta)")
    p.add_argument("--dump-csv", metavar="FILE", help="write per-trial values as CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the invariant battery")
    _common(p)
    p.add_argument("--deep", action="store_true", help="add exact-oracle comparisons")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("generate", help="write a generated graph as an edge list")
    p.add_argument("spec", help="complete:n | regular_circulant:n:d | dumbbell:n:b | dense_random:n:p[:theta[:seed]]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", help="output file (default stdout)")
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except InputError as exc:
        err.write(f"error: {exc}\n")
        return 2
    except RegimeError as exc:
        err.write(f"regime error ({type(exc).__name__}): {exc}\n")
        for step in getattr(exc, "fallthrough", []):
            err.write(f"  skipped {step['tier']}: {step['error']}: {step['reason']}\n")
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
