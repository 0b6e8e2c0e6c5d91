"""Recursive partition of a dense graph into high-conductance blocks.

A block whose best found cut has conductance below ``zeta`` is split along
that cut, after which vertices with at least as many neighbours on the other
side as on their own are swapped across.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateSplit, InvalidGraphError, PartitionDivergence
from .graph import Graph, min_degree_ratio
from .spectral import best_cut


@dataclass(frozen=True)
class SplitRecord:
    parent: tuple[int, ...]
    depth: int
    cut_side: tuple[int, ...]
    cut_conductance: float
    crossing_edges: int
    cut_method: str
    y1: tuple[int, ...]
    y2: tuple[int, ...]
    z1: tuple[int, ...]
    z2: tuple[int, ...]


@dataclass(frozen=True)
class Partition:
    blocks: tuple[tuple[int, ...], ...]
    depths: tuple[int, ...]
    block_cuts: tuple[float, ...]
    zeta: float
    theta: float
    cut_mode: str
    history: tuple[SplitRecord, ...] = field(default=())

    @property
    def s(self) -> int:
        return len(self.blocks)

    def block_of(self, n: int) -> np.ndarray:
        out = np.full(n, -1, dtype=np.int64)
        for i, b in enumerate(self.blocks):
            out[list(b)] = i
        return out

    def to_dict(self) -> dict:
        return {
            "blocks": [list(b) for b in self.blocks],
            "depths": list(self.depths),
            "block_cuts": list(self.block_cuts),
            "zeta": self.zeta,
            "theta": self.theta,
            "cut_mode": self.cut_mode,
            "splits": [
                {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(rec).items()}
                for rec in self.history
            ],
        }


def swap_sets(g: Graph, x1: tuple[int, ...], x2: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
    """``(Y1, Y2, Z1, Z2)`` for a split of ``X = X1 + X2``.

    ``Y_l`` holds the vertices of ``X_l`` with no more neighbours in ``X_l``
    than in the other part; ``Z_l = (X_l + Y_other) - Y_l``.
    """
    in1 = g.degree_into(x1, x1)
    out1 = g.degree_into(x1, x2)
    in2 = g.degree_into(x2, x2)
    out2 = g.degree_into(x2, x1)
    y1 = tuple(v for v, a, b in zip(x1, in1, out1) if a <= b)
    y2 = tuple(v for v, a, b in zip(x2, in2, out2) if a <= b)
    z1 = tuple(sorted((set(x1) | set(y2)) - set(y1)))
    z2 = tuple(sorted((set(x2) | set(y1)) - set(y2)))
    return y1, y2, z1, z2


def _depth_cap(theta: float) -> int:
    return math.ceil(2.0 / theta) + 1


def partition(g: Graph, zeta: float, cut_mode: str = "auto") -> Partition:
    """Split blocks until every block's best found cut has conductance ``>= zeta``.

    Raises
    ------
    PartitionDivergence
        If some block would exceed depth ``ceil(2/theta) + 1``.
    DegenerateSplit
        If a child block is empty or induces a disconnected subgraph.
    """
    if not 0 < zeta < 1:
        raise ValueError("zeta must lie in (0, 1)")
    theta = min_degree_ratio(g).theta
    cap = _depth_cap(theta)
    pending: list[tuple[tuple[int, ...], int]] = [(tuple(range(g.n)), 0)]
    final: list[tuple[tuple[int, ...], int, float]] = []
    history: list[SplitRecord] = []
    while pending:
        block, depth = pending.pop(0)
        if len(block) < 2:
            raise DegenerateSplit("block has fewer than two vertices", block)
        sub = g.subgraph(block)
        found = best_cut(sub, cut_mode)
        if found.cut.conductance >= zeta:
            final.append((block, depth, found.cut.conductance))
            continue
        if depth + 1 > cap:
            raise PartitionDivergence(
                f"depth {depth + 1} exceeds ceil(2/theta)+1 = {cap}; input is outside the dense regime or zeta is misconfigured"
            )
        x1 = tuple(sorted(block[i] for i in found.cut.vertices))
        x2 = tuple(sorted(set(block) - set(x1)))
        y1, y2, z1, z2 = swap_sets(g, x1, x2)
        for child in (z1, z2):
            if len(child) < 2:
                raise DegenerateSplit("split produced a block with fewer than two vertices", child)
            try:
                g.subgraph(child)
            except InvalidGraphError:
                raise DegenerateSplit("split produced a disconnected block", child) from None
        history.append(
            SplitRecord(
                parent=block,
                depth=depth,
                cut_side=x1,
                cut_conductance=found.cut.conductance,
                crossing_edges=found.cut.crossing_edges,
                cut_method=found.method,
                y1=y1,
                y2=y2,
                z1=z1,
                z2=z2,
            )
        )
        pending.append((z1, depth + 1))
        pending.append((z2, depth + 1))
    final.sort(key=lambda item: item[0])
    return Partition(
        blocks=tuple(b for b, _, _ in final),
        depths=tuple(d for _, d, _ in final),
        block_cuts=tuple(c for _, _, c in final),
        zeta=zeta,
        theta=theta,
        cut_mode=cut_mode,
        history=tuple(history),
    )


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""
    counterexample: list = field(default_factory=list)
    fatal: bool = True


@dataclass
class PartitionReport:
    checks: list[Check]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks if c.fatal)

    def failed(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def get(self, name: str) -> list[Check]:
        return [c for c in self.checks if c.name == name]


def verify_partition(g: Graph, p: Partition) -> PartitionReport:
    """Check every structural invariant of ``p`` against ``g``.

    Non-fatal checks (``fatal=False``) are reported but do not affect
    ``report.ok``; the "most degrees" count is one of them because its
    bookkeeping carries asymptotic slack.
    """
    checks: list[Check] = []
    n = g.n
    theta = min_degree_ratio(g).theta
    zeta = p.zeta

    seen: dict[int, int] = {}
    dup = []
    for i, b in enumerate(p.blocks):
        for v in b:
            if v in seen:
                dup.append(v)
            seen[v] = i
    checks.append(Check("disjoint", not dup, "blocks overlap" if dup else "", sorted(set(dup))))
    missing = sorted(set(range(n)) - set(seen))
    checks.append(Check("coverage", not missing, "vertices not covered" if missing else "", missing))

    for i, (b, d) in enumerate(zip(p.blocks, p.depths)):
        try:
            sub = g.subgraph(b)
            connected = len(b) >= 2
        except InvalidGraphError:
            sub, connected = None, False
        checks.append(Check("connected", connected, f"block {i}", [] if connected else list(b)))

        floor = theta / 3**d * n
        deg_in = g.degree_into(b, b)
        low = [v for v, k in zip(b, deg_in) if k < floor]
        checks.append(Check("degdepth", not low, f"block {i}: min internal degree {deg_in.min()} vs {floor:.3f}", low))

        checks.append(Check("depth_bound", d < 2.0 / theta, f"block {i}: depth {d} vs 2/theta = {2.0 / theta:.3f}"))

        if sub is not None:
            phi = best_cut(sub, p.cut_mode).cut.conductance
            checks.append(Check("stopping_rule", phi >= zeta, f"block {i}: best cut {phi:.4g} vs zeta {zeta:.4g}"))

        slack = d * math.sqrt(zeta) * n
        lossy = [v for v, k in zip(b, deg_in) if k <= g.degrees[v] - slack] if d else []
        bound = 3 * d * math.sqrt(zeta) * n
        checks.append(
            Check("mostdegrees", len(lossy) <= bound, f"block {i}: {len(lossy)} lossy vs {bound:.2f}", lossy, fatal=False)
        )

    for b, d in zip(p.blocks, p.depths):
        traced = (d == 0 and b == tuple(range(n))) or any(b in (r.z1, r.z2) and r.depth == d - 1 for r in p.history)
        checks.append(Check("history", traced, f"block of size {len(b)} at depth {d}", [] if traced else list(b)))

    for k, rec in enumerate(p.history):
        x1 = rec.cut_side
        x2 = tuple(sorted(set(rec.parent) - set(x1)))
        # each v in Y_l has >= deg_X(v)/2 >= min_deg/2 neighbours across the cut
        min_deg = max(int(g.degree_into(rec.parent, rec.parent).min()), 1)
        for name, y in (("Y1", rec.y1), ("Y2", rec.y2)):
            limit = rec.crossing_edges / (min_deg / 2.0)
            checks.append(
                Check("Yival", len(y) <= limit, f"split {k} {name}: |Y|={len(y)} vs e/(beta n/2)={limit:.3f}", list(y))
            )
            asym = math.sqrt(zeta) * n / 2.0
            checks.append(
                Check("Yival_zeta", len(y) <= asym, f"split {k} {name}: |Y|={len(y)} vs zeta^(1/2) n/2={asym:.3f}", list(y))
            )
        for name, z in (("Z1", rec.z1), ("Z2", rec.z2)):
            checks.append(
                Check("sizeS", len(z) >= theta * n / 2.0, f"split {k} {name}: |Z|={len(z)} vs theta n/2={theta * n / 2:.2f}")
            )
        recomputed = swap_sets(g, x1, x2)
        checks.append(Check("swap_rule", recomputed == (rec.y1, rec.y2, rec.z1, rec.z2), f"split {k}"))
    return PartitionReport(checks)
