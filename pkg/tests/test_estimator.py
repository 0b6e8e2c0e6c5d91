import math

import mpmath
import numpy as np
import pytest

import covertime.estimator as estimator
from covertime.errors import BudgetError, HypothesisViolation, PrecisionError, RegimeError
from covertime.estimator import (
    EstimatorConfig,
    F,
    Fprime,
    block_estimates,
    estimate,
    expected_max_kappa,
    max_expected_kappa,
    solve_tstar,
    start_sample,
    theorem1_estimate,
    theorem2_estimate,
    theorem3_bounds,
)
from covertime.graph import Graph, complete, dense_random, dumbbell, min_degree_ratio, regular_circulant
from covertime.markov import build_chain
from covertime.params import eps1, upper_factor
from covertime.partition import Partition, partition
from covertime.walker import WalkConfig, measure_kappa, simulate_cover

from oracles import exact_max_kappa, harmonic, transition_fractions


def single_block(g):
    return Partition((tuple(range(g.n)),), (0,), (1.0,), 0.05, min_degree_ratio(g).theta, "auto")


# -- t* ------------------------------------------------------------------------


@pytest.mark.parametrize("n", [2, 10, 100, 1000])
def test_tstar_uniform_closed_form(n):
    ts = solve_tstar(np.full(n, 1.0 / n))
    assert ts.value == pytest.approx(n * math.log(n), rel=1e-8)
    assert ts.theta_eff == pytest.approx(1.0)


def test_tstar_two_states_is_2_ln_2():
    assert solve_tstar([0.5, 0.5]).value == pytest.approx(2 * math.log(2), rel=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_tstar_matches_high_precision_root(seed):
    g = dense_random(60, 0.5, 0.3, seed=seed)
    pi = build_chain(g).pi
    mpmath.mp.dps = 40
    exact = mpmath.findroot(lambda t: mpmath.fsum(mpmath.exp(-p * t) for p in pi) - 1, 60 * math.log(60) * 1.1)
    assert solve_tstar(pi).value == pytest.approx(float(exact), rel=1e-10)


def test_tstar_bracket_and_sign_change():
    g = dumbbell(40, 3)
    ts = solve_tstar(build_chain(g).pi)
    lo, hi = ts.bracket
    assert lo == pytest.approx(40 * math.log(40))
    assert lo <= ts.value <= hi
    assert abs(Fprime(ts.value, np.array(ts.pi)) + 1) <= 1e-10


def test_F_monotone_and_derivative():
    pi = build_chain(dense_random(30, 0.5, 0.3, seed=2)).pi
    ts = np.linspace(10, 500, 50)
    vals = [F(t, pi) for t in ts]
    assert np.all(np.diff(vals) < 0)
    h = 1e-4
    for t in (50.0, 200.0):
        assert (F(t + h, pi) - F(t - h, pi)) / (2 * h) == pytest.approx(Fprime(t, pi), rel=1e-6)


def test_F_ratio_is_small():
    for g in (complete(50), dense_random(80, 0.5, 0.35, seed=1)):
        theta = min_degree_ratio(g).theta
        ts = solve_tstar(build_chain(g).pi)
        assert ts.F_at_tstar / ts.value <= 1 / (theta * math.log(g.n))


@pytest.mark.parametrize("pi", [[1.0], [0.5, 0.6], [1.2, -0.2], [0.0, 1.0]])
def test_tstar_rejects_bad_pi(pi):
    with pytest.raises(RegimeError):
        solve_tstar(pi)


# -- tier 1 --------------------------------------------------------------------


def test_tier1_complete_100_band_contains_exact():
    r = theorem1_estimate(complete(100))
    exact = float(99 * harmonic(99))
    assert r.tier == "theorem1"
    assert r.point_estimate == pytest.approx(100 * math.log(100))
    assert r.lower == pytest.approx(r.point_estimate * (1 - eps1(100)))
    assert r.upper == pytest.approx(r.point_estimate * upper_factor(100, 0.99))
    assert r.lower <= exact <= r.upper
    assert r.diagnostics["tpi_holds"] is False


def test_tier1_circulant():
    r = theorem1_estimate(regular_circulant(100, 60))
    assert r.point_estimate == pytest.approx(100 * math.log(100))


def test_tier1_rejects_dumbbell():
    with pytest.raises(HypothesisViolation):
        theorem1_estimate(dumbbell(100, 1))


# -- tier 2 --------------------------------------------------------------------


def test_block_masses_sum_to_one():
    g = dumbbell(60, 4)
    ests = block_estimates(g, build_chain(g), partition(g, 0.3))
    assert sum(e.pi_i for e in ests) == pytest.approx(1.0)
    assert len(ests) == 2


@pytest.mark.parametrize("g", [complete(40), regular_circulant(50, 30), dense_random(60, 0.7, 0.5, seed=3)])
def test_single_block_tier2_equals_tier1(g):
    t1 = theorem1_estimate(g)
    t2 = theorem2_estimate(g, single_block(g))
    assert t2.point_estimate == pytest.approx(t1.point_estimate, rel=1e-9)


def test_tier2_dumbbell_band_contains_simulation():
    g = dumbbell(100, 40)
    r = theorem2_estimate(g, partition(g, 0.3))
    assert r.point_estimate == pytest.approx(391.2524565900587, rel=1e-9)
    mc = simulate_cover(g, 0, WalkConfig(seed=3, trials=1000))
    assert r.lower <= mc.mean <= r.upper


def test_tier2_needs_fast_mixing():
    g = dumbbell(100, 1)
    with pytest.raises(RegimeError):
        theorem2_estimate(g, partition(g, 0.3))


# -- tier 3 --------------------------------------------------------------------


def test_single_block_kappa_is_deterministic():
    g = dense_random(30, 0.5, 0.3, seed=1)
    vals = expected_max_kappa(build_chain(g).P_simple, [range(30)], [23])
    assert np.allclose(vals, 23)


def test_tier3_single_block_cbar_is_ceiling():
    g = complete(30)
    r = theorem3_bounds(g, single_block(g))
    assert r.lower == pytest.approx(r.diagnostics["tau_minus"][0], rel=1e-12)
    assert r.diagnostics["kappa_lower"]["method"] == "exact"


@pytest.mark.parametrize(
    "g,blocks,tau",
    [
        (dumbbell(6, 1), [[0, 1, 2], [3, 4, 5]], [2, 3]),
        (dumbbell(6, 2), [[0, 1, 2], [3, 4, 5]], [3, 2]),
        (complete(5), [[0, 1], [2, 3, 4]], [2, 2]),
        (regular_circulant(6, 4), [[0, 2, 4], [1, 3, 5]], [2, 2]),
    ],
)
def test_dp_matches_exact_rationals(g, blocks, tau):
    vals = expected_max_kappa(build_chain(g).P_simple, blocks, tau)
    P = transition_fractions(g.adjacency, lazy=False)
    block_of = [0] * g.n
    for i, b in enumerate(blocks):
        for v in b:
            block_of[v] = i
    for u in range(g.n):
        assert vals[u] == pytest.approx(float(exact_max_kappa(P, block_of, tau, u)), rel=1e-12)


def test_dp_matches_simulation():
    g = dumbbell(20, 2)
    blocks = [range(10), range(10, 20)]
    tau = [15, 15]
    exact = expected_max_kappa(build_chain(g).P_simple, blocks, tau)
    st = measure_kappa(g, 0, blocks, tau, WalkConfig(seed=2, trials=5000))
    assert abs(st.mean - exact[0]) <= 3 * st.half_width


def test_dp_budget():
    with pytest.raises(BudgetError):
        expected_max_kappa(np.eye(100), [range(50), range(50, 100)], [2000, 2000])


def test_simulation_fallback(monkeypatch):
    g = dumbbell(20, 2)
    blocks = [range(10), range(10, 20)]
    exact = expected_max_kappa(build_chain(g).P_simple, blocks, [12, 12])
    monkeypatch.setattr(estimator, "LATTICE_MAX_ENTRIES", 10)
    est = max_expected_kappa(g, blocks, [12, 12], trials=3000, seed=1)
    assert est.method == "simulation"
    assert est.half_width <= 0.05 * est.value
    assert abs(est.value - exact.max()) <= 3 * est.half_width + 0.02 * exact.max()


def test_precision_error(monkeypatch):
    g = dumbbell(20, 2)
    monkeypatch.setattr(estimator, "LATTICE_MAX_ENTRIES", 10)
    with pytest.raises(PrecisionError):
        max_expected_kappa(g, [range(10), range(10, 20)], [12, 12], trials=50, precision=1e-4, start_hint=0)


def test_start_sample():
    assert start_sample(complete(10)) == list(range(10))
    s = start_sample(dense_random(150, 0.5, 0.3, seed=0), limit=20)
    assert 1 < len(s) <= 20 and s == sorted(s)


def test_tier3_dumbbell_contains_simulation():
    g = dumbbell(100, 5)
    r = theorem3_bounds(g, partition(g, 0.3))
    heur = r.diagnostics["heuristic_upper"]
    assert heur["label"] == "heuristic, unproven"
    assert heur["value"] >= r.lower
    assert r.upper == pytest.approx(2 * (1 + r.diagnostics["eps2"]) * r.lower)
    start = r.diagnostics["kappa_lower"]["argmax"]
    mc = simulate_cover(g, start, WalkConfig(seed=0, trials=1000))
    assert r.lower <= mc.mean <= r.upper


# -- dispatcher ----------------------------------------------------------------


@pytest.mark.parametrize(
    "g,tier",
    [
        (complete(50), "theorem1"),
        (regular_circulant(100, 60), "theorem1"),
        (dumbbell(100, 40), "theorem2"),
        (dumbbell(100, 20), "theorem3"),
        (dumbbell(100, 1), "theorem3"),
    ],
)
def test_dispatcher_tiers(g, tier):
    r = estimate(g)
    assert r.tier == tier
    assert [f["tier"] for f in r.fallthrough] == {
        "theorem1": [],
        "theorem2": ["theorem1"],
        "theorem3": ["theorem1", "theorem2"],
    }[tier]
    assert r.config["zeta"] is not None and r.config["omega"] is not None
    assert r.lower <= r.upper


def test_dispatcher_partition_failure_falls_back_to_single_block():
    g = dense_random(40, 0.6, 0.45, seed=0)
    r = estimate(g, EstimatorConfig(zeta=0.999))
    assert r.tier == "theorem3"
    assert [f["tier"] for f in r.fallthrough] == ["theorem1", "partition"]
    assert len(r.blocks) == 1


def test_dispatcher_deterministic_and_serialisable():
    import json

    g = dumbbell(60, 20)
    a, b = estimate(g).to_dict(), estimate(g).to_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_config_resolution():
    cfg = EstimatorConfig(zeta=0.2).resolve(complete(30))
    assert cfg.zeta == 0.2 and cfg.omega >= 10
