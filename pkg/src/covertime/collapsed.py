"""Induced chain on a partition block.

Watching the simple walk only while it is inside a block ``B`` gives a chain
on ``B``: internal edges keep weight one, and every excursion outside ``B``
becomes an oriented return edge ``(v, w)`` with probability ``rho[v, w]``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.linalg

from .errors import AbsorbingEscape
from .graph import Graph, min_degree_ratio
from .markov import ChainMatrices
from .spectral import BRUTE_FORCE_MAX_N, best_cut, brute_force_weighted

SINGULAR_RCOND = 1e-13


def _block_indices(n: int, block: Iterable[int]) -> tuple[np.ndarray, np.ndarray]:
    inside = np.zeros(n, dtype=bool)
    inside[np.fromiter(block, dtype=np.int64)] = True
    if not inside.any():
        raise ValueError("block must be non-empty")
    return np.nonzero(inside)[0], np.nonzero(~inside)[0]


def excursion_weights(c: ChainMatrices, block: Iterable[int]) -> np.ndarray:
    """``rho[v, w]``: leave the block from ``v`` at once, re-enter first at ``w``.

    Computed as ``P_BO (I - Q)^-1 P_OB`` with the simple-walk kernel, where
    ``Q`` is the kernel restricted to the outside set. Rows and columns follow
    the sorted order of ``block``.
    """
    inside, outside = _block_indices(c.n, block)
    if outside.size == 0:
        return np.zeros((inside.size, inside.size))
    p = c.P_simple
    q = p[np.ix_(outside, outside)]
    with warnings.catch_warnings():
        # singularity is detected from the pivots below and reported as AbsorbingEscape
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(np.eye(outside.size) - q)
    diag = np.abs(np.diag(lu))
    if diag.min() <= SINGULAR_RCOND * max(diag.max(), 1.0):
        raise AbsorbingEscape("I - Q is numerically singular: the walk can avoid the block forever")
    # N P_OB = (I - Q)^-1 P_OB
    reentry = scipy.linalg.lu_solve((lu, piv), p[np.ix_(outside, inside)])
    return p[np.ix_(inside, outside)] @ reentry


@dataclass(frozen=True, eq=False)
class CollapsedChain:
    """Collapsed chain on ``block`` (sorted global vertex ids).

    ``degrees`` are degrees in the full graph, which are also the vertex
    weights of the collapsed multigraph.
    """

    block: tuple[int, ...]
    P: np.ndarray
    rho: np.ndarray
    pi: np.ndarray
    degrees: np.ndarray
    internal_adjacency: np.ndarray

    @property
    def size(self) -> int:
        return len(self.block)

    @property
    def weights(self) -> np.ndarray:
        """Symmetric edge weights ``deg(v) P(v, w)`` (loops on the diagonal)."""
        return self.degrees[:, None] * self.P

    def row_sum_residual(self) -> float:
        return float(np.max(np.abs(self.P.sum(axis=1) - 1.0)))

    def exit_mass_residual(self) -> float:
        """Max deviation of ``sum_w rho[v, w]`` from ``(deg(v) - deg_B(v)) / deg(v)``."""
        deg_in = self.internal_adjacency.sum(axis=1)
        want = (self.degrees - deg_in) / self.degrees
        return float(np.max(np.abs(self.rho.sum(axis=1) - want)))

    def detailed_balance_residual(self) -> float:
        """``max |deg(v) rho[v, w] - deg(w) rho[w, v]|``."""
        flow = self.degrees[:, None] * self.rho
        return float(np.max(np.abs(flow - flow.T)))

    def stationarity_residual(self) -> float:
        return float(np.max(np.abs(self.pi @ self.P - self.pi)))

    def to_dict(self) -> dict:
        return {
            "block": list(self.block),
            "P": self.P.tolist(),
            "pi": self.pi.tolist(),
        }


def build_collapsed(c: ChainMatrices, block: Iterable[int]) -> CollapsedChain:
    inside, _ = _block_indices(c.n, block)
    rho = excursion_weights(c, inside)
    adj = c.graph.adjacency[np.ix_(inside, inside)]
    deg = c.graph.degrees[inside].astype(float)
    P = adj / deg[:, None] + rho
    pi = deg / deg.sum()
    for arr in (P, rho, pi, deg, adj):
        arr.setflags(write=False)
    return CollapsedChain(tuple(inside.tolist()), P, rho, pi, deg, adj)


@dataclass(frozen=True)
class CollapsedConductance:
    bound: float
    found: float
    exact: float | None
    theta: float


def weighted_conductance(cc: CollapsedChain, side: Iterable[int]) -> float:
    """Conductance of a cut of the collapsed multigraph; ``side`` indexes ``cc.block`` positions."""
    mask = np.zeros(cc.size, dtype=bool)
    mask[list(side)] = True
    w = cc.weights
    cut = float(w[np.ix_(mask, ~mask)].sum())
    vol = float(cc.degrees[mask].sum())
    total = float(cc.degrees.sum())
    return cut * total / (vol * (total - vol))


def collapsed_conductance_bound(cc: CollapsedChain, g: Graph, cut_mode: str = "auto") -> CollapsedConductance:
    """Lower bound ``phi_found * theta^2 / 3`` on the collapsed chain's conductance.

    ``phi_found`` is the best cut found inside the induced subgraph on the
    block; for blocks of at most 20 vertices the exact weighted conductance
    is returned as well.
    """
    theta = min_degree_ratio(g).theta
    if cc.size < 2:
        return CollapsedConductance(bound=0.0, found=float("inf"), exact=None, theta=theta)
    found = best_cut(g.subgraph(cc.block), cut_mode).cut.conductance
    exact = None
    if cc.size <= BRUTE_FORCE_MAX_N:
        w = np.array(cc.weights)
        w = 0.5 * (w + w.T)
        exact, _ = brute_force_weighted(w, cc.degrees)
    return CollapsedConductance(bound=found * theta**2 / 3.0, found=found, exact=exact, theta=theta)
