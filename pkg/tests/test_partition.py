import importlib

import numpy as np
import pytest

from covertime.errors import DegenerateSplit, PartitionDivergence, RegimeError
from covertime.graph import Cut, Graph, complete, dense_random, dumbbell, min_degree_ratio
from covertime.partition import Partition, partition, swap_sets, verify_partition
from covertime.spectral import CutSearchResult

from oracles import generated_suite

# the package re-exports the function ``partition``, which shadows the submodule
partition_mod = importlib.import_module("covertime.partition")


def hub_variant(n=20):
    """Dumbbell-like graph: vertex 0 of clique A sees all of B but only vertex 1 of A."""
    h = n // 2
    a = np.zeros((n, n), dtype=bool)
    a[1:h, 1:h] = True
    a[h:, h:] = True
    np.fill_diagonal(a, False)
    a[0, 1] = a[1, 0] = True
    a[0, h:] = a[h:, 0] = True
    return Graph(a)


@pytest.mark.parametrize("n", [5, 12, 30])
def test_complete_graph_single_block(n):
    p = partition(complete(n), 0.5)
    assert p.blocks == (tuple(range(n)),)
    assert p.depths == (0,)
    assert p.history == ()


def test_dumbbell_20_1():
    g = dumbbell(20, 1)
    p = partition(g, 0.1)
    assert p.blocks == (tuple(range(10)), tuple(range(10, 20)))
    assert p.depths == (1, 1)
    (rec,) = p.history
    assert rec.y1 == () and rec.y2 == ()
    assert verify_partition(g, p).ok


def test_swap_moves_hub_vertex():
    g = hub_variant()
    a, b = tuple(range(10)), tuple(range(10, 20))
    y1, y2, z1, z2 = swap_sets(g, a, b)
    assert y1 == (0,)
    assert y2 == ()
    assert 0 in z2 and 0 not in z1
    p = partition(g, 0.3)
    block_of = p.block_of(g.n)
    assert block_of[0] == block_of[10]
    assert block_of[0] != block_of[1]


@pytest.mark.parametrize("n,b", [(100, 1), (100, 40), (200, 1)])
def test_large_dumbbells_split_into_cliques(n, b):
    g = dumbbell(n, b)
    p = partition(g, 0.3)
    assert p.blocks == (tuple(range(n // 2)), tuple(range(n // 2, n)))
    assert verify_partition(g, p).ok


def test_invariants_on_generated_suite():
    for _, g in generated_suite():
        theta = min_degree_ratio(g).theta
        p = partition(g, 0.2)
        report = verify_partition(g, p)
        assert report.ok, [(c.name, c.detail) for c in report.failed() if c.fatal]
        assert all(d < 2 / theta for d in p.depths)


def test_hand_built_invalid_partition_fails_degree_check():
    g = complete(10)
    halves = Partition(((0, 1, 2, 3, 4), (5, 6, 7, 8, 9)), (0, 0), (1.25, 1.25), 0.5, 0.9, "auto")
    report = verify_partition(g, halves)
    assert not report.ok
    assert all(not c.passed for c in report.get("degdepth"))
    assert all(not c.passed for c in report.get("history"))


def test_single_block_passes_coverage():
    g = dense_random(30, 0.5, 0.3, seed=0)
    single = Partition((tuple(range(30)),), (0,), (1.0,), 0.01, 0.3, "auto")
    report = verify_partition(g, single)
    assert all(c.passed for c in report.get("coverage") + report.get("disjoint"))


def test_overlap_and_gaps_are_reported():
    g = complete(6)
    bad = Partition(((0, 1, 2), (2, 3, 4)), (0, 0), (1.0, 1.0), 0.5, 5 / 6, "auto")
    report = verify_partition(g, bad)
    (disjoint,) = report.get("disjoint")
    (coverage,) = report.get("coverage")
    assert disjoint.counterexample == [2]
    assert coverage.counterexample == [5]


def test_idempotent_on_final_blocks():
    g = dumbbell(60, 3)
    p = partition(g, 0.3)
    for block in p.blocks:
        sub = g.subgraph(block)
        assert partition(sub, 0.3).blocks == (tuple(range(sub.n)),)


def test_deterministic():
    g = dense_random(60, 0.5, 0.3, seed=9)
    assert partition(g, 0.4) == partition(g, 0.4)


def test_divergence(monkeypatch):
    monkeypatch.setattr(partition_mod, "_depth_cap", lambda theta: 0)
    with pytest.raises(PartitionDivergence):
        partition(dumbbell(20, 1), 0.1)


def test_degenerate_split(monkeypatch):
    def lone_vertex(g, mode="auto"):
        return CutSearchResult(Cut((0,), 0.0, g.n - 1, g.n - 1, g.volume - g.n + 1), "sweep")

    monkeypatch.setattr(partition_mod, "best_cut", lone_vertex)
    with pytest.raises(DegenerateSplit) as exc:
        partition(complete(6), 0.5)
    assert len(exc.value.block) < 2


def test_unreachable_threshold_is_a_regime_error():
    with pytest.raises(RegimeError):
        partition(dense_random(40, 0.6, 0.45, seed=0), 0.999)


def test_zeta_range():
    with pytest.raises(ValueError):
        partition(complete(5), 1.5)


def test_json_shape():
    d = partition(dumbbell(20, 1), 0.1).to_dict()
    assert d["blocks"] == [list(range(10)), list(range(10, 20))]
    assert d["depths"] == [1, 1]
    assert d["splits"][0]["crossing_edges"] == 1
