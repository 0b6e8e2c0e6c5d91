"""Acceptance criteria 1-10.

Each test prints one ``ACCEPTANCE <k> PASS|FAIL`` line (also collected into the
pytest terminal summary) and then asserts the verdict. Wall-clock limits are
part of each criterion.
"""

import math
import time

import numpy as np
import pytest

import acceptance_log
from covertime.collapsed import build_collapsed
from covertime.estimator import solve_tstar, theorem1_estimate, theorem2_estimate, theorem3_bounds
from covertime.graph import (
    complete,
    dense_random,
    dumbbell,
    min_degree_ratio,
    regular_circulant,
    stationary,
)
from covertime.markov import build_chain, first_visit_oracle
from covertime.params import default_zeta, eps1, upper_factor
from covertime.partition import Partition, partition, verify_partition
from covertime.spectral import best_cut
from covertime.walker import WalkConfig, empirical_collapsed, simulate_cover

from oracles import exact_cover_time, generated_suite, harmonic, small_suite


def verdict(k: int, title: str, ok: bool, detail: str, elapsed: float, limit: float) -> None:
    within = elapsed < limit
    line = f"ACCEPTANCE {k:>2} {'PASS' if ok and within else 'FAIL'}  {title}: {detail} [{elapsed:.1f}s / limit {limit:g}s]"
    acceptance_log.LINES.append(line)
    print(line)
    assert ok, detail
    assert within, f"runtime {elapsed:.1f}s exceeds {limit:g}s"


def test_criterion_01_tstar_closed_form():
    start = time.perf_counter()
    errors = {}
    for n in (10, 100, 1000):
        pi = stationary(regular_circulant(n, n // 2)) if n <= 100 else np.full(n, 1.0 / n)
        errors[n] = abs(solve_tstar(pi).value / (n * math.log(n)) - 1)
    elapsed = time.perf_counter() - start
    detail = ", ".join(f"n={n}: rel err {e:.1e}" for n, e in errors.items())
    verdict(1, "t* = n ln n for uniform pi", max(errors.values()) <= 1e-8, detail, elapsed, 1)


def test_criterion_02_tstar_bounds():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    bad = []
    for k in range(200):
        n = int(rng.integers(10, 301))
        g = dense_random(n, float(rng.uniform(0.5, 0.9)), 0.3, seed=k)
        theta = min_degree_ratio(g).theta
        assert theta >= 0.3
        t = solve_tstar(stationary(g)).value
        lo = n * math.log(n)
        if not lo * (1 - 1e-12) <= t <= lo / theta * (1 + 1e-12):
            bad.append((k, n, t))
    elapsed = time.perf_counter() - start
    verdict(2, "n ln n <= t* <= n ln n / theta", not bad, f"{200 - len(bad)}/200 graphs inside", elapsed, 30)


def test_criterion_03_first_visit_oracle():
    # Expected to fail: the relative-error target 5/omega needs T pi_v <= 1/omega,
    # which no graph with n <= 12 can satisfy (see the decisions ledger).
    start = time.perf_counter()
    omega = 20.0
    results = []
    for name, g in small_suite():
        if g.n > 12 or min_degree_ratio(g).theta < 0.4:
            continue
        o = first_visit_oracle(build_chain(g), omega)
        results.append((o.max_relative_error, name, o))
    elapsed = time.perf_counter() - start
    err, name, o = max(results, key=lambda r: r[0])
    best_err, best_name, _ = min(results, key=lambda r: r[0])
    detail = (
        f"worst relative error {err:.3g} on {name} (u, v, t) = {o.worst}, "
        f"best {best_err:.3g} on {best_name}, target {5 / omega:g}"
    )
    verdict(3, "first-visit estimate vs taboo probabilities", err <= 5 / omega, detail, elapsed, 300)


def test_criterion_04_coupon_collector():
    start = time.perf_counter()
    # exact enumeration pins the offset: E cover(K_n) = (n - 1) H_{n-1} with no extra step
    offsets = [exact_cover_time(complete(n).adjacency, 0) - (n - 1) * harmonic(n - 1) for n in (4, 5)]
    assert offsets == [0, 0]
    exact50 = float(49 * harmonic(49))
    stats = simulate_cover(complete(50), 0, WalkConfig(seed=50, trials=10_000))
    mean_ok = abs(stats.mean - exact50) <= 0.01 * exact50
    gaps = {}
    contained = {}
    for n in (50, 100, 200):
        t = theorem1_estimate(complete(n))
        exact = float((n - 1) * harmonic(n - 1))
        assert t.lower == pytest.approx(t.point_estimate * (1 - eps1(n)))
        assert t.upper == pytest.approx(t.point_estimate * upper_factor(n, (n - 1) / n))
        gaps[n] = abs(exact - t.point_estimate) / t.point_estimate
        contained[n] = t.lower <= exact <= t.upper
    elapsed = time.perf_counter() - start
    ok = mean_ok and gaps[50] <= 0.15 and gaps[200] < gaps[50]
    detail = (
        f"MC mean {stats.mean:.2f} vs 49 H_49 = {exact50:.2f} ({abs(stats.mean / exact50 - 1):.2%}); "
        + ", ".join(f"n={n} gap {gaps[n]:.1%} in band {contained[n]}" for n in gaps)
    )
    verdict(4, "coupon collector on K_n", ok, detail, elapsed, 120)


def test_criterion_05_detailed_balance():
    start = time.perf_counter()
    graphs = [dense_random(30 + 2 * s, 0.6, 0.4, seed=s) for s in range(50)]
    graphs += [dumbbell(n, b) for n in (20, 40, 60, 80, 100) for b in (1, 3, 8, 15)]
    worst_db = worst_st = 0.0
    n_blocks = 0
    for g in graphs:
        c = build_chain(g)
        for block in partition(g, 0.3).blocks:
            cc = build_collapsed(c, block)
            worst_db = max(worst_db, cc.detailed_balance_residual())
            worst_st = max(worst_st, cc.stationarity_residual())
            n_blocks += 1
    elapsed = time.perf_counter() - start
    detail = f"{n_blocks} blocks of {len(graphs)} graphs; detailed balance {worst_db:.1e}, stationarity {worst_st:.1e}"
    verdict(5, "collapsed-chain reversibility", worst_db <= 1e-10 and worst_st <= 1e-10, detail, elapsed, 120)


def test_criterion_06_trace_equivalence():
    start = time.perf_counter()
    g = dumbbell(60, 2)
    c = build_chain(g)
    worst = 0.0
    for block in partition(g, 0.3).blocks:
        cc = build_collapsed(c, block)
        freq, _ = empirical_collapsed(g, block, WalkConfig(seed=6), transitions=10**6)
        worst = max(worst, float(0.5 * np.abs(freq - cc.P).sum(axis=1).max()))
    elapsed = time.perf_counter() - start
    verdict(6, "walk traces vs collapsed chain", worst <= 0.02, f"max row TV {worst:.4f}", elapsed, 60)


def test_criterion_07_partition():
    start = time.perf_counter()
    p = partition(dumbbell(100, 1), default_zeta(100, min_degree_ratio(dumbbell(100, 1)).theta))
    cliques = p.blocks == (tuple(range(50)), tuple(range(50, 100)))
    failures = []
    suite = generated_suite()
    for name, g in suite:
        theta = min_degree_ratio(g).theta
        q = partition(g, default_zeta(g.n, theta))
        report = verify_partition(g, q)
        if not report.ok or not all(d < 2 / theta for d in q.depths):
            failures.append(name)
    elapsed = time.perf_counter() - start
    detail = f"dumbbell(100,1) two cliques: {cliques}; invariants hold on {len(suite) - len(failures)}/{len(suite)}"
    verdict(7, "partition correctness", cliques and not failures, detail, elapsed, 60)


def high_conductance_graphs():
    out = [complete(n) for n in (20, 40, 60, 80, 100)]
    out += [regular_circulant(n, d) for n, d in ((40, 24), (60, 40), (80, 50), (100, 60), (120, 80))]
    out += [dense_random(n, 0.75, 0.5, seed=s) for s, n in enumerate((30, 40, 50, 60, 70, 80, 90, 100, 110, 120))]
    return out


def test_criterion_08_tier_consistency():
    start = time.perf_counter()
    worst = 0.0
    graphs = high_conductance_graphs()
    for g in graphs:
        theta = min_degree_ratio(g).theta
        t1 = theorem1_estimate(g)
        single = Partition((tuple(range(g.n)),), (0,), (t1.diagnostics["conductance"],), t1.diagnostics["zeta"], theta, "auto")
        t2 = theorem2_estimate(g, single)
        worst = max(worst, abs(t2.point_estimate / t1.point_estimate - 1))
    elapsed = time.perf_counter() - start
    verdict(8, "single-block tier 2 = tier 1", worst <= 0.01, f"{len(graphs)} graphs, max rel diff {worst:.1e}", elapsed, 60)


def test_criterion_09_theorem3_containment():
    start = time.perf_counter()
    parts = []
    ok = True
    for b in (1, 5, 20):
        g = dumbbell(100, b)
        r = theorem3_bounds(g, partition(g, default_zeta(100, min_degree_ratio(g).theta)))
        u = r.diagnostics["kappa_lower"]["argmax"]
        mc = simulate_cover(g, u, WalkConfig(seed=b, trials=1000))
        inside = r.lower <= mc.mean <= r.upper
        ok &= inside
        parts.append(f"b={b}: [{r.lower:.0f}, {r.upper:.0f}] MC {mc.mean:.0f} from {u}")
    elapsed = time.perf_counter() - start
    verdict(9, "tier-3 interval contains MC cover time", ok, "; ".join(parts), elapsed, 600)


def test_criterion_10_conductance_oracle():
    start = time.perf_counter()
    below = []
    bridge_mismatch = []
    checked_bridges = 0
    for name, g in generated_suite():
        if g.n > 14:
            continue
        exact = best_cut(g, "brute_force").cut
        sweep = best_cut(g, "sweep").cut
        if sweep.conductance < exact.conductance - 1e-15:
            below.append(name)
        half = tuple(range(g.n // 2))
        if name.startswith("dumbbell") and exact.vertices in (half, tuple(range(g.n // 2, g.n))):
            checked_bridges += 1
            if sweep.conductance != exact.conductance:
                bridge_mismatch.append(name)
    elapsed = time.perf_counter() - start
    detail = f"sweep below exact on {len(below)} graphs; bridge-cut dumbbells {checked_bridges}, mismatches {bridge_mismatch}"
    verdict(10, "sweep vs brute-force conductance", not below and not bridge_mismatch and checked_bridges > 0, detail, elapsed, 120)
