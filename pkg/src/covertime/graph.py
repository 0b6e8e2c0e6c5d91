"""Undirected simple graphs, conductance of explicit cuts, test families.

Vertices are dense 0-based integers. Graphs read from edge-list files keep the
original labels in ``Graph.labels`` so reports can map back.
"""

from __future__ import annotations

import functools
import io
import os
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidCutError, InvalidGraphError, ParseError


@dataclass(frozen=True, eq=False)
class Graph:
    """Connected undirected simple graph on ``n >= 2`` vertices.

    ``adjacency`` is a read-only symmetric boolean matrix with an empty
    diagonal; laziness is a property of the walk, not of the graph.
    """

    adjacency: np.ndarray
    labels: tuple = field(default=())

    def __post_init__(self) -> None:
        a = np.array(self.adjacency, dtype=bool, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidGraphError(f"adjacency must be square, got shape {a.shape}")
        if a.shape[0] < 2:
            raise InvalidGraphError("graph needs at least 2 vertices")
        if np.any(np.diag(a)):
            raise InvalidGraphError("self-loops are not allowed")
        if not np.array_equal(a, a.T):
            raise InvalidGraphError("adjacency is not symmetric")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)
        labels = tuple(self.labels) if self.labels else tuple(range(a.shape[0]))
        if len(labels) != a.shape[0]:
            raise InvalidGraphError("labels do not match vertex count")
        object.__setattr__(self, "labels", labels)
        if not _is_connected(a):
            raise InvalidGraphError("graph is not connected")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], labels: Sequence = ()) -> "Graph":
        a = np.zeros((n, n), dtype=bool)
        for u, v in edges:
            if u == v:
                raise InvalidGraphError(f"self-loop at vertex {u}")
            a[u, v] = a[v, u] = True
        return cls(a, tuple(labels))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self) -> int:
        return hash((self.labels, np.packbits(self.adjacency).tobytes()))

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @functools.cached_property
    def degrees(self) -> np.ndarray:
        d = self.adjacency.sum(axis=1).astype(np.int64)
        d.setflags(write=False)
        return d

    @property
    def m(self) -> int:
        return int(self.degrees.sum()) // 2

    @property
    def volume(self) -> int:
        return 2 * self.m

    def edges(self) -> list[tuple[int, int]]:
        """Edges as ``(u, v)`` with ``u < v`` in sorted order."""
        u, v = np.nonzero(np.triu(self.adjacency, k=1))
        return list(zip(u.tolist(), v.tolist()))

    @functools.cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """``(offsets, targets)`` neighbour arrays, neighbours in increasing order."""
        offsets = np.zeros(self.n + 1, dtype=np.int64)
        offsets[1:] = np.cumsum(self.degrees)
        targets = np.nonzero(self.adjacency)[1].astype(np.int64)
        return offsets, targets

    def subgraph(self, vertices: Iterable[int]) -> "Graph":
        """Induced subgraph, relabelled densely in increasing vertex order.

        ``labels`` of the result are the vertex ids in ``self``. Raises
        ``InvalidGraphError`` when the induced subgraph is disconnected.
        """
        idx = np.array(sorted(set(int(v) for v in vertices)), dtype=np.int64)
        sub = self.adjacency[np.ix_(idx, idx)]
        return Graph(sub, tuple(idx.tolist()))

    def degree_into(self, vertices: Iterable[int], into: Iterable[int]) -> np.ndarray:
        """``deg_into(v)`` for each ``v`` in ``vertices`` (in the given order)."""
        rows = np.fromiter(vertices, dtype=np.int64)
        cols = np.fromiter(into, dtype=np.int64)
        if cols.size == 0:
            return np.zeros(rows.size, dtype=np.int64)
        return self.adjacency[np.ix_(rows, cols)].sum(axis=1).astype(np.int64)


def _is_connected(a: np.ndarray) -> bool:
    n = a.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        v = queue.popleft()
        nxt = np.nonzero(a[v] & ~seen)[0]
        seen[nxt] = True
        queue.extend(nxt.tolist())
    return bool(seen.all())


@dataclass(frozen=True)
class Cut:
    """A cut ``(S : V - S)`` normalised so that ``0 < d(S) <= m``."""

    vertices: tuple[int, ...]
    conductance: float
    crossing_edges: int
    volume: int
    complement_volume: int

    def to_dict(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "conductance": self.conductance,
            "crossing_edges": self.crossing_edges,
            "volume": self.volume,
            "complement_volume": self.complement_volume,
        }


@dataclass(frozen=True)
class DensityWitness:
    theta: float
    min_degree: int
    n: int


def stationary(g: Graph) -> np.ndarray:
    """Stationary distribution ``d_i / 2m`` of the simple random walk."""
    return g.degrees / g.volume


def conductance_value(crossing: int, vol_s: int, vol_total: int) -> float:
    """``e(S, S') d(V) / (d(S) d(S'))`` from integer parts, correctly rounded."""
    return float(int(crossing) * int(vol_total)) / float(int(vol_s) * (int(vol_total) - int(vol_s)))


def cut_conductance(g: Graph, S: Iterable[int]) -> Cut:
    """Exact conductance of the cut defined by ``S``.

    If ``d(S) > m`` the complement is returned as the cut side, so the result
    always satisfies ``0 < d(S) <= m``.
    """
    mask = np.zeros(g.n, dtype=bool)
    members = list(S)
    if members:
        idx = np.asarray(members, dtype=np.int64)
        if idx.min() < 0 or idx.max() >= g.n:
            raise InvalidCutError("cut contains a vertex outside the graph")
        mask[idx] = True
    k = int(mask.sum())
    if k == 0 or k == g.n:
        raise InvalidCutError("cut side must be a non-empty proper subset of V")
    vol_s = int(g.degrees[mask].sum())
    if 2 * vol_s > g.volume:
        mask = ~mask
        vol_s = g.volume - vol_s
    crossing = int(g.adjacency[np.ix_(mask, ~mask)].sum())
    return Cut(
        vertices=tuple(np.nonzero(mask)[0].tolist()),
        conductance=conductance_value(crossing, vol_s, g.volume),
        crossing_edges=crossing,
        volume=vol_s,
        complement_volume=g.volume - vol_s,
    )


def min_degree_ratio(g: Graph) -> DensityWitness:
    dmin = int(g.degrees.min())
    return DensityWitness(theta=dmin / g.n, min_degree=dmin, n=g.n)


# -- generators -------------------------------------------------------------


def complete(n: int) -> Graph:
    if n < 2:
        raise InvalidGraphError("complete graph needs n >= 2")
    return Graph(~np.eye(n, dtype=bool))


def regular_circulant(n: int, d: int) -> Graph:
    """``d``-regular circulant with offsets ``1..d//2`` (plus ``n/2`` when ``d`` is odd)."""
    if not 1 <= d < n:
        raise InvalidGraphError(f"need 1 <= d < n, got d={d}, n={n}")
    if d % 2 == 1 and n % 2 == 1:
        raise InvalidGraphError("odd degree needs even n")
    offsets = list(range(1, d // 2 + 1))
    if d % 2 == 1:
        offsets.append(n // 2)
    a = np.zeros((n, n), dtype=bool)
    i = np.arange(n)
    for k in offsets:
        a[i, (i + k) % n] = True
        a[(i + k) % n, i] = True
    return Graph(a)


def dumbbell(n: int, b: int) -> Graph:
    """Two cliques on ``n/2`` vertices joined by ``b`` crossing edges.

    Crossing edge ``j`` joins ``j mod h`` to ``h + (j mod h + j // h) mod h``
    where ``h = n/2``: successive shifted perfect matchings, so the bridge
    endpoints are spread and every vertex keeps degree ``>= h - 1``.
    """
    if n % 2 or n < 4:
        raise InvalidGraphError("dumbbell needs even n >= 4")
    h = n // 2
    if not 1 <= b <= h * h:
        raise InvalidGraphError(f"need 1 <= b <= {h * h}, got {b}")
    a = np.zeros((n, n), dtype=bool)
    a[:h, :h] = True
    a[h:, h:] = True
    np.fill_diagonal(a, False)
    for j in range(b):
        i = j % h
        w = h + (i + j // h) % h
        a[i, w] = a[w, i] = True
    return Graph(a)


def dense_random(n: int, p: float, theta: float, seed: int, max_tries: int = 1000) -> Graph:
    """``G(n, p)`` conditioned (by rejection) on connectivity and ``min degree >= theta*n``."""
    if not 0 < p <= 1:
        raise InvalidGraphError("p must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    floor = theta * n
    for _ in range(max_tries):
        upper = np.triu(rng.random((n, n)) < p, k=1)
        a = upper | upper.T
        if a.sum(axis=1).min() >= floor and _is_connected(a):
            return Graph(a)
    raise InvalidGraphError(
        f"no G({n}, {p}) sample met min degree >= {theta}*n in {max_tries} tries"
    )


FAMILIES = ("complete", "regular_circulant", "dumbbell", "dense_random")


def generate(family: str, **params) -> Graph:
    """Build a test-family graph; ``theta`` (optional except for dense_random) is checked."""
    theta = params.pop("theta", None)
    if family == "complete":
        g = complete(**params)
    elif family == "regular_circulant":
        g = regular_circulant(**params)
    elif family == "dumbbell":
        g = dumbbell(**params)
    elif family == "dense_random":
        if theta is None:
            raise InvalidGraphError("dense_random needs theta")
        return dense_random(theta=theta, **params)
    else:
        raise InvalidGraphError(f"unknown family {family!r}; expected one of {FAMILIES}")
    if theta is not None and g.degrees.min() < theta * g.n:
        raise InvalidGraphError(f"{family} graph violates min degree >= {theta}*n")
    return g


def parse_generator_spec(spec: str, seed: int = 0) -> Graph:
    """Parse ``family:arg:...`` strings used by the command line.

    ``complete:n``, ``regular_circulant:n:d``, ``dumbbell:n:b``,
    ``dense_random:n:p[:theta[:seed]]`` (theta defaults to ``p - 0.1``).
    """
    family, *args = spec.split(":")
    try:
        if family == "complete" and len(args) == 1:
            return complete(int(args[0]))
        if family == "regular_circulant" and len(args) == 2:
            return regular_circulant(int(args[0]), int(args[1]))
        if family == "dumbbell" and len(args) == 2:
            return dumbbell(int(args[0]), int(args[1]))
        if family == "dense_random" and 2 <= len(args) <= 4:
            n, p = int(args[0]), float(args[1])
            theta = float(args[2]) if len(args) > 2 else p - 0.1
            s = int(args[3]) if len(args) > 3 else seed
            return dense_random(n, p, theta, s)
    except ValueError as exc:
        raise ParseError(f"bad generator spec {spec!r}: {exc}") from None
    raise ParseError(f"bad generator spec {spec!r}")


# -- edge-list IO -----------------------------------------------------------


def _label_key(label: str):
    try:
        return (0, int(label), "")
    except ValueError:
        return (1, 0, label)


def parse_edge_list(text: str) -> Graph:
    """Parse ``u v`` lines; ``#`` starts a comment. Labels are remapped densely.

    Integer labels sort numerically, other labels lexicographically after them.
    """
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise ParseError(f"expected 'u v', got {raw.strip()!r}", line=lineno)
        if tokens[0] == tokens[1]:
            raise ParseError(f"self-loop {tokens[0]!r}", line=lineno)
        pairs.append((tokens[0], tokens[1]))
    if not pairs:
        raise ParseError("no edges found")
    names = sorted({t for pair in pairs for t in pair}, key=_label_key)
    index = {name: i for i, name in enumerate(names)}
    labels = tuple(int(x) if _label_key(x)[0] == 0 else x for x in names)
    return Graph.from_edges(len(names), ((index[u], index[v]) for u, v in pairs), labels)


def read_edge_list(path: str | os.PathLike) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh.read())


def format_edge_list(g: Graph) -> str:
    buf = io.StringIO()
    for u, v in g.edges():
        buf.write(f"{g.labels[u]} {g.labels[v]}\n")
    return buf.getvalue()


def write_edge_list(g: Graph, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_edge_list(g))
