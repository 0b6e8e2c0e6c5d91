"""Cover-time estimates in three tiers.

* Tier 1 (high conductance): the root ``t*`` of ``F'(t) = -1`` with
  ``F(t) = sum_v exp(-pi_v t) / pi_v``.
* Tier 2 (fast mixing): partition into high-conductance blocks and take
  ``C = max_i C_i / pi(V_i)`` where ``C_i`` is ``t*`` of block ``i``'s
  collapsed chain.
* Tier 3 (always applies): a factor-two bracket built from
  ``E max_i kappa(u, C_i^-, i)``, the expected number of steps until every
  block ``i`` has been departed from ``C_i^-`` times.

Every reported cover time is for the simple (non-lazy) walk.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .collapsed import build_collapsed, collapsed_conductance_bound
from .errors import BudgetError, HypothesisViolation, MixingTooSlow, PrecisionError, RegimeError
from .graph import Graph, min_degree_ratio
from .markov import MIXING_CAP, ChainMatrices, build_chain, exact_mixing_time
from .params import default_omega, default_zeta, eps1, eps2, upper_factor
from .partition import Partition, partition
from .spectral import CutSearchResult, best_cut
from .walker import WalkConfig, measure_kappa

TSTAR_RTOL = 1e-10
# exact lattice recursion limits: stored entries and multiply-adds
LATTICE_MAX_ENTRIES = 12_000_000
LATTICE_MAX_FLOPS = 2_000_000_000
START_SAMPLE_MAX = 100
PILOT_TRIALS = 100
PILOT_KEEP = 3


def F(t: float, pi: np.ndarray) -> float:
    """``sum_v exp(-pi_v t) / pi_v``; monotone decreasing in ``t``."""
    return float(np.sum(np.exp(-pi * t) / pi))


def Fprime(t: float, pi: np.ndarray) -> float:
    """``-sum_v exp(-pi_v t)``; strictly increasing in ``t``."""
    return float(-np.sum(np.exp(-pi * t)))


@dataclass(frozen=True)
class TStar:
    value: float
    F_at_tstar: float
    pi: tuple[float, ...]
    theta_eff: float
    bracket: tuple[float, float]

    @property
    def n(self) -> int:
        return len(self.pi)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "F_at_tstar": self.F_at_tstar,
            "theta_eff": self.theta_eff,
            "bracket": list(self.bracket),
        }


def solve_tstar(pi: Sequence[float]) -> TStar:
    """Unique root of ``F'(t) = -1``.

    The root lies in ``[n ln n, ln n / pi_min]``: by convexity
    ``sum_v exp(-pi_v t) >= n exp(-t/n)``, and every term is at most
    ``exp(-pi_min t)``. With ``theta_eff = n pi_min`` the upper end is
    ``n ln n / theta_eff``. Bisection brackets the root, Newton polishes it.

    Raises
    ------
    RegimeError
        If ``pi`` is not a probability vector or the bracket shows no sign
        change.
    """
    p = np.asarray(pi, dtype=float)
    n = p.size
    if n < 2 or np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-9:
        raise RegimeError("pi must be a positive probability vector on at least two states")
    lo = n * math.log(n)
    hi = math.log(n) / float(p.min())
    theta_eff = n * float(p.min())

    def g(t: float) -> float:
        return float(np.sum(np.exp(-p * t))) - 1.0

    if hi <= lo * (1.0 + 1e-14):
        t = lo  # uniform pi: closed form n ln n
    else:
        g_lo, g_hi = g(lo), g(hi)
        if not (g_lo >= 0.0 >= g_hi):
            raise RegimeError(f"F'(t) + 1 has no sign change on [{lo:.6g}, {hi:.6g}]")
        a, b = lo, hi
        while b - a > TSTAR_RTOL * 1e-3 * a:
            mid = 0.5 * (a + b)
            if g(mid) > 0.0:
                a = mid
            else:
                b = mid
        t = 0.5 * (a + b)
        for _ in range(3):
            slope = -float(np.sum(p * np.exp(-p * t)))
            step = g(t) / slope
            nxt = t - step
            if not lo <= nxt <= hi:
                break
            t = nxt
            if abs(step) <= 1e-16 * t:
                break
    return TStar(value=t, F_at_tstar=F(t, p), pi=tuple(p.tolist()), theta_eff=theta_eff, bracket=(lo, hi))


@dataclass(frozen=True)
class EstimatorConfig:
    zeta: float | None = None
    omega: float | None = None
    ratio_floor: float = 4.0
    cut_mode: str = "auto"
    seed: int = 0
    kappa_trials: int = 2000
    precision: float = 0.05
    workers: int = 1
    mixing_cap: int = MIXING_CAP

    def resolve(self, g: Graph) -> "EstimatorConfig":
        theta = min_degree_ratio(g).theta
        return EstimatorConfig(
            zeta=self.zeta if self.zeta is not None else default_zeta(g.n, theta),
            omega=self.omega if self.omega is not None else default_omega(g.n, theta),
            ratio_floor=self.ratio_floor,
            cut_mode=self.cut_mode,
            seed=self.seed,
            kappa_trials=self.kappa_trials,
            precision=self.precision,
            workers=self.workers,
            mixing_cap=self.mixing_cap,
        )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class CoverReport:
    tier: str
    point_estimate: float | None
    lower: float
    upper: float
    blocks: list[dict] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    fallthrough: list[dict] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "tier": self.tier,
            "point_estimate": self.point_estimate,
            "lower": self.lower,
            "upper": self.upper,
            "blocks": self.blocks,
            "diagnostics": self.diagnostics,
            "fallthrough": self.fallthrough,
            "config": self.config,
        }


def _band(n: int, theta: float) -> dict:
    return {"eps_lower": eps1(n), "upper_factor": upper_factor(n, theta)}


def theorem1_estimate(
    g: Graph,
    chain: ChainMatrices | None = None,
    cut_result: CutSearchResult | None = None,
    omega: float | None = None,
    zeta: float | None = None,
    cut_mode: str = "auto",
) -> CoverReport:
    """Tier 1: point estimate ``t*`` with band ``[t*(1-eps1), t*(1 + 2/(theta ln n))]``.

    Raises ``HypothesisViolation`` when the found conductance is below
    ``zeta``. Whether ``T pi_v <= 1/omega`` holds is recorded, not enforced:
    at desk scale it essentially never does (see the decisions ledger).
    """
    theta = min_degree_ratio(g).theta
    n = g.n
    zeta = default_zeta(n, theta) if zeta is None else zeta
    omega = default_omega(n, theta) if omega is None else omega
    cut_result = cut_result or best_cut(g, cut_mode)
    phi = cut_result.cut.conductance
    if phi < zeta:
        raise HypothesisViolation(f"found conductance {phi:.4g} is below zeta = {zeta:.4g}")
    chain = chain or build_chain(g)
    ts = solve_tstar(chain.pi)
    band = _band(n, theta)
    diagnostics = {
        "tstar": ts.to_dict(),
        "conductance": phi,
        "cut_method": cut_result.method,
        "certified_ratio": cut_result.certified_ratio,
        "theta": theta,
        "zeta": zeta,
        "omega": omega,
        **band,
    }
    try:
        T = exact_mixing_time(chain, omega)
        diagnostics["T_mix"] = T
        diagnostics["tpi_holds"] = bool(T * float(chain.pi.max()) <= 1.0 / omega)
    except MixingTooSlow as exc:
        diagnostics["T_mix"] = None
        diagnostics["T_mix_error"] = str(exc)
    return CoverReport(
        tier="theorem1",
        point_estimate=ts.value,
        lower=ts.value * (1.0 - band["eps_lower"]),
        upper=ts.value * band["upper_factor"],
        blocks=[{"vertices": list(range(n)), "C_i": ts.value, "pi_i": 1.0}],
        diagnostics=diagnostics,
    )


def _single_block(g: Graph, zeta: float, cut_mode: str) -> Partition:
    theta = min_degree_ratio(g).theta
    phi = best_cut(g, cut_mode).cut.conductance
    return Partition((tuple(range(g.n)),), (0,), (phi,), zeta, theta, cut_mode)


@dataclass(frozen=True)
class BlockEstimate:
    vertices: tuple[int, ...]
    C_i: float
    pi_i: float
    collapsed_bound: float
    collapsed_exact: float | None

    def to_dict(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "C_i": self.C_i,
            "pi_i": self.pi_i,
            "collapsed_conductance_bound": self.collapsed_bound,
            "collapsed_conductance_exact": self.collapsed_exact,
        }


def block_estimates(g: Graph, chain: ChainMatrices, p: Partition) -> list[BlockEstimate]:
    """``C_i`` (``t*`` of the collapsed chain) and ``pi(V_i)`` for every block."""
    out = []
    for block in p.blocks:
        cc = build_collapsed(chain, block)
        cond = collapsed_conductance_bound(cc, g, p.cut_mode)
        out.append(
            BlockEstimate(
                vertices=block,
                C_i=solve_tstar(cc.pi).value,
                pi_i=float(chain.pi[list(block)].sum()),
                collapsed_bound=cond.bound,
                collapsed_exact=cond.exact,
            )
        )
    return out


def theorem2_estimate(
    g: Graph,
    p: Partition,
    chain: ChainMatrices | None = None,
    omega: float | None = None,
    ratio_floor: float = 4.0,
    mixing_cap: int = MIXING_CAP,
) -> CoverReport:
    """Tier 2: ``C = max_i C_i / pi(V_i)``.

    Applies when the lazy mixing time is at most ``2C / ratio_floor``
    (``2C`` is the lazy-walk counterpart of ``C``); otherwise raises
    ``MixingTooSlow``. The concentration tail ``exp(-2 eps^2 C / T)`` with
    ``eps = eps2`` is reported for the block-visit counts.
    """
    theta = min_degree_ratio(g).theta
    n = g.n
    omega = default_omega(n, theta) if omega is None else omega
    chain = chain or build_chain(g)
    ests = block_estimates(g, chain, p)
    ratios = [e.C_i / e.pi_i for e in ests]
    C = max(ratios)
    T = exact_mixing_time(chain, omega, mixing_cap)
    if T > 2.0 * C / ratio_floor:
        raise MixingTooSlow(f"lazy T_mix = {T} exceeds 2C/ratio_floor = {2.0 * C / ratio_floor:.4g}")
    band = _band(n, theta)
    e2 = eps2(n)
    return CoverReport(
        tier="theorem2",
        point_estimate=C,
        lower=C * (1.0 - band["eps_lower"]),
        upper=C * band["upper_factor"],
        blocks=[e.to_dict() for e in ests],
        diagnostics={
            "C": C,
            "argmax_block": int(np.argmax(ratios)),
            "T_mix": T,
            "omega": omega,
            "ratio_floor": ratio_floor,
            "mix_ratio": T / (2.0 * C),
            "concentration_tail": math.exp(-2.0 * e2**2 * (2.0 * C) / T),
            "theta": theta,
            "zeta": p.zeta,
            "partition": p.to_dict(),
            **band,
        },
    )


def _lattice_cost(tau: Sequence[int], n: int) -> tuple[int, int]:
    size = int(np.prod([t + 1 for t in tau]))
    return size * n, size * n * n


def expected_max_kappa(P: np.ndarray, blocks: Sequence[Sequence[int]], tau: Sequence[int]) -> np.ndarray:
    """Exact ``E max_i kappa(u, tau_i, i)`` for every start ``u``.

    Dynamic programme over the count lattice ``0 <= c_i <= tau_i``:
    ``E[c](x)`` is the expected number of further steps from ``x`` with
    ``c_i`` departures from block ``i`` so far. For ``x`` in a block that is
    still counting, ``E[c](x) = 1 + sum_y P(x, y) E[c + e_i](y)``; vertices of
    finished blocks solve a linear system at the same ``c``. Raises
    ``BudgetError`` when the lattice is too large.
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    tau = [int(t) for t in tau]
    s = len(tau)
    entries, flops = _lattice_cost(tau, n)
    if entries > LATTICE_MAX_ENTRIES or flops > LATTICE_MAX_FLOPS:
        raise BudgetError(f"count lattice needs {entries} entries / {flops} operations")
    idx = [np.asarray(sorted(b), dtype=np.int64) for b in blocks]
    rows = [P[i] for i in idx]
    shape = tuple(t + 1 for t in tau)
    E = np.zeros(shape + (n,))
    factor_cache: dict[tuple[bool, ...], tuple] = {}
    for flat in range(int(np.prod(shape)) - 1, -1, -1):
        c = np.unravel_index(flat, shape)
        done = tuple(c[i] == tau[i] for i in range(s))
        if all(done):
            continue
        out = E[c]
        for i in range(s):
            if not done[i]:
                nxt = list(c)
                nxt[i] += 1
                out[idx[i]] = 1.0 + rows[i] @ E[tuple(nxt)]
        if any(done):
            if done not in factor_cache:
                cap = np.concatenate([idx[i] for i in range(s) if done[i]])
                free = np.concatenate([idx[i] for i in range(s) if not done[i]])
                lu = scipy.linalg.lu_factor(np.eye(cap.size) - P[np.ix_(cap, cap)])
                factor_cache[done] = (cap, free, lu, P[np.ix_(cap, free)])
            cap, free, lu, p_cf = factor_cache[done]
            out[cap] = scipy.linalg.lu_solve(lu, 1.0 + p_cf @ out[free])
    return np.array(E[(0,) * s])


def start_sample(g: Graph, limit: int = START_SAMPLE_MAX) -> list[int]:
    """All vertices if ``n <= limit``, else a degree-stratified sample of ``limit``."""
    if g.n <= limit:
        return list(range(g.n))
    order = np.lexsort((np.arange(g.n), g.degrees))
    picks = np.linspace(0, g.n - 1, limit).round().astype(int)
    return sorted(set(order[picks].tolist()))


@dataclass(frozen=True)
class KappaEstimate:
    value: float
    argmax: int
    method: str
    half_width: float

    def to_dict(self) -> dict:
        return asdict(self)


def max_expected_kappa(
    g: Graph,
    blocks: Sequence[Sequence[int]],
    tau: Sequence[int],
    chain: ChainMatrices | None = None,
    trials: int = 2000,
    seed: int = 0,
    workers: int = 1,
    precision: float | None = 0.05,
    start_hint: int | None = None,
) -> KappaEstimate:
    """``max_u E max_i kappa(u, tau_i, i)``: exact when the lattice fits, else simulated.

    The simulated fallback pilots every vertex of ``start_sample`` (or only
    ``start_hint`` when given), reruns the best few at the full budget, and raises
    ``PrecisionError`` when the relative 95% half-width at the maximising
    start exceeds ``precision``.
    """
    chain = chain or build_chain(g)
    try:
        vals = expected_max_kappa(chain.P_simple, blocks, tau)
        u = int(np.argmax(vals))
        return KappaEstimate(float(vals[u]), u, "exact", 0.0)
    except BudgetError:
        pass
    starts = [start_hint] if start_hint is not None else start_sample(g)
    if len(starts) > 1:
        # cheap pilot over all starts, full budget on the most promising few
        pilot = WalkConfig(seed=seed, trials=min(trials, PILOT_TRIALS), workers=workers)
        means = [measure_kappa(g, v, blocks, tau, pilot).mean for v in starts]
        starts = [starts[k] for k in np.argsort(means, kind="stable")[::-1][:PILOT_KEEP]]
    best = None
    for v in sorted(starts):
        st = measure_kappa(g, v, blocks, tau, WalkConfig(seed=seed, trials=trials, workers=workers))
        if best is None or st.mean > best[0]:
            best = (st.mean, v, st.half_width)
    mean, u, hw = best
    if precision is not None and hw > precision * mean:
        raise PrecisionError(f"kappa estimate at start {u}: half-width {hw:.4g} vs mean {mean:.4g}", hw)
    return KappaEstimate(mean, u, "simulation", hw)


def theorem3_bounds(
    g: Graph,
    p: Partition,
    chain: ChainMatrices | None = None,
    trials: int = 2000,
    seed: int = 0,
    workers: int = 1,
    precision: float = 0.05,
) -> CoverReport:
    """Tier 3: ``[Cbar, 2 (1 + eps2) Cbar]`` with ``Cbar = max_u E max_i kappa(u, C_i^-, i)``.

    ``C_i^+- = (1 +- eps2) C_i`` and the targets are rounded up. The same
    quantity at ``C_i^+`` is reported as a heuristic (unproven) upper bound,
    and ``max_i C_i^- / pi(V_i)`` as a stationary-rate cross-check.
    """
    theta = min_degree_ratio(g).theta
    n = g.n
    chain = chain or build_chain(g)
    ests = block_estimates(g, chain, p)
    e2 = eps2(n)
    c_minus = [(1.0 - e2) * e.C_i for e in ests]
    c_plus = [(1.0 + e2) * e.C_i for e in ests]
    tau_minus = [math.ceil(x) for x in c_minus]
    tau_plus = [math.ceil(x) for x in c_plus]
    lower = max_expected_kappa(g, p.blocks, tau_minus, chain, trials, seed, workers, precision)
    diagnostics = {
        "Cbar": lower.value,
        "kappa_lower": lower.to_dict(),
        "tau_minus": tau_minus,
        "tau_plus": tau_plus,
        "eps2": e2,
        "stationary_rate": max(cm / e.pi_i for cm, e in zip(c_minus, ests)),
        "theta": theta,
        "zeta": p.zeta,
        "partition": p.to_dict(),
    }
    try:
        heur = max_expected_kappa(g, p.blocks, tau_plus, chain, trials, seed, workers, None, lower.argmax)
        diagnostics["heuristic_upper"] = {"label": "heuristic, unproven", **heur.to_dict()}
    except (BudgetError, PrecisionError) as exc:
        diagnostics["heuristic_upper"] = {"label": "heuristic, unproven", "error": str(exc)}
    return CoverReport(
        tier="theorem3",
        point_estimate=None,
        lower=lower.value,
        upper=2.0 * (1.0 + e2) * lower.value,
        blocks=[e.to_dict() for e in ests],
        diagnostics=diagnostics,
    )


def estimate(g: Graph, config: EstimatorConfig = EstimatorConfig()) -> CoverReport:
    """Try tier 1, then tier 2, then tier 3, recording why each tier was skipped.

    If partitioning itself fails, tier 3 runs on the single-block partition,
    which keeps its lower bound valid but loosens it.
    """
    cfg = config.resolve(g)
    chain = build_chain(g)
    cut = best_cut(g, cfg.cut_mode)
    fallthrough: list[dict] = []
    try:
        report = theorem1_estimate(g, chain, cut, cfg.omega, cfg.zeta, cfg.cut_mode)
    except RegimeError as exc:
        fallthrough.append({"tier": "theorem1", "error": type(exc).__name__, "reason": str(exc)})
        try:
            p = partition(g, cfg.zeta, cfg.cut_mode)
        except RegimeError as exc2:
            fallthrough.append({"tier": "partition", "error": type(exc2).__name__, "reason": str(exc2)})
            p = _single_block(g, cfg.zeta, cfg.cut_mode)
            report = None
        else:
            try:
                report = theorem2_estimate(g, p, chain, cfg.omega, cfg.ratio_floor, cfg.mixing_cap)
            except RegimeError as exc3:
                fallthrough.append({"tier": "theorem2", "error": type(exc3).__name__, "reason": str(exc3)})
                report = None
        if report is None:
            try:
                report = theorem3_bounds(g, p, chain, cfg.kappa_trials, cfg.seed, cfg.workers, cfg.precision)
            except RegimeError as exc4:
                exc4.fallthrough = fallthrough
                raise
    report.fallthrough = fallthrough
    report.config = cfg.to_dict()
    return report
