"""Approximate minimum-conductance cuts.

``best_cut`` stands in for an O(log n)-approximate multicommodity-flow cut:
a spectral sweep over the second eigenvector of the lazy walk for larger
graphs, exhaustive search for ``n <= 20``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverFailure
from .graph import Cut, Graph, conductance_value

BRUTE_FORCE_MAX_N = 20
POWER_MAX_ITER = 100_000
POWER_TOL = 1e-10


@dataclass(frozen=True)
class CutSearchResult:
    cut: Cut
    method: str
    certified_ratio: float | None = None
    eigenvalue: float | None = None

    def to_dict(self) -> dict:
        return {
            "cut": self.cut.to_dict(),
            "method": self.method,
            "certified_ratio": self.certified_ratio,
            "eigenvalue": self.eigenvalue,
        }


def _symmetric_lazy(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """``D^(1/2) P D^(-1/2)`` for the lazy walk ``P``, and ``sqrt(d)``."""
    sd = np.sqrt(g.degrees.astype(float))
    s = 0.5 * g.adjacency / np.outer(sd, sd)
    s[np.diag_indices(g.n)] += 0.5
    return s, sd


def _right_residual(g: Graph, lam: float, f: np.ndarray) -> float:
    d = g.degrees.astype(float)
    pf = 0.5 * f + 0.5 * (g.adjacency @ f) / d
    return float(np.max(np.abs(pf - lam * f)))


def _orient(f: np.ndarray) -> np.ndarray:
    # deterministic sign: first coordinate of non-negligible size is positive
    big = np.nonzero(np.abs(f) > 1e-8 * np.max(np.abs(f)))[0]
    if big.size and f[big[0]] < 0:
        f = -f
    return f


def second_eigenpair(g: Graph, method: str = "dense") -> tuple[float, np.ndarray]:
    """Second-largest eigenvalue of the lazy walk and a right eigenvector.

    The eigenvector ``f`` is pi-orthogonal to the constants and normalised to
    ``sum_i pi_i f_i^2 = 1``. ``method="dense"`` uses a symmetric dense
    eigensolver; ``method="power"`` runs power iteration on the symmetrised
    matrix with the top eigenvector ``sqrt(pi)`` deflated.

    Raises
    ------
    SolverFailure
        If the residual ``||P f - lam f||_inf`` exceeds 1e-10, or power
        iteration hits its iteration cap.
    """
    s, sd = _symmetric_lazy(g)
    top = sd / np.linalg.norm(sd)
    if method == "dense":
        try:
            vals, vecs = np.linalg.eigh(s)
        except np.linalg.LinAlgError as exc:
            raise SolverFailure(f"eigh failed: {exc}", float("nan")) from None
        lam, phi = float(vals[-2]), vecs[:, -2]
    elif method == "power":
        lam, phi = _power_deflated(s, top)
    else:
        raise ValueError(f"unknown method {method!r}")
    phi = phi - top * (top @ phi)
    f = phi / sd
    pi = g.degrees / g.volume
    f = _orient(f / np.sqrt(np.sum(pi * f * f)))
    res = _right_residual(g, lam, f)
    if res > POWER_TOL:
        raise SolverFailure("second eigenpair did not converge", res)
    return lam, f


def _power_deflated(s: np.ndarray, top: np.ndarray) -> tuple[float, np.ndarray]:
    n = s.shape[0]
    rng = np.random.default_rng(0x5EED)
    x = rng.standard_normal(n)
    x -= top * (top @ x)
    x /= np.linalg.norm(x)
    res = float("inf")
    for _ in range(POWER_MAX_ITER):
        y = s @ x
        y -= top * (top @ y)
        lam = float(x @ y)
        res = float(np.max(np.abs(y - lam * x)))
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0, x
        x = y / norm
        if res <= POWER_TOL * 1e-2:
            return float(x @ s @ x), x
    raise SolverFailure(f"power iteration hit the {POWER_MAX_ITER} iteration cap", res)


def sweep_cut(g: Graph, f: np.ndarray | None = None) -> Cut:
    """Best prefix cut of the vertices ordered by ``f`` (both directions)."""
    if f is None:
        _, f = second_eigenpair(g)
    best: tuple[float, tuple[int, ...]] | None = None
    adj = g.adjacency
    deg = g.degrees
    total = g.volume
    for order in (np.argsort(f, kind="stable"), np.argsort(-f, kind="stable")):
        in_s = np.zeros(g.n, dtype=bool)
        crossing = 0
        vol = 0
        for k, v in enumerate(order[:-1].tolist()):
            crossing += int(deg[v]) - 2 * int(adj[v, in_s].sum())
            in_s[v] = True
            vol += int(deg[v])
            phi = conductance_value(crossing, vol, total)
            if 2 * vol < total:
                candidates = [tuple(sorted(order[: k + 1].tolist()))]
            elif 2 * vol > total:
                candidates = [tuple(sorted(order[k + 1 :].tolist()))]
            else:
                candidates = [tuple(sorted(order[: k + 1].tolist())), tuple(sorted(order[k + 1 :].tolist()))]
            side = min(candidates)
            if best is None or phi < best[0] or (phi == best[0] and side < best[1]):
                best = (phi, side)
    assert best is not None
    return _exact_side(g, best[1])


def _exact_side(g: Graph, side: tuple[int, ...]) -> Cut:
    # side is already normalised (d(S) <= m); kept verbatim when d(S) == m
    mask = np.zeros(g.n, dtype=bool)
    mask[list(side)] = True
    crossing = int(g.adjacency[np.ix_(mask, ~mask)].sum())
    vol = int(g.degrees[mask].sum())
    return Cut(side, conductance_value(crossing, vol, g.volume), crossing, vol, g.volume - vol)


def _subset_tables(w: np.ndarray, deg: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Volume and cut weight of every subset mask of ``range(n)``.

    ``w`` is a symmetric non-negative weight matrix (diagonal = self-loop
    weight), ``deg`` the vertex weights used as volumes.
    """
    n = w.shape[0]
    vol = np.zeros(1)
    inner = np.zeros(1)  # sum over unordered pairs j < k inside S, plus loops
    for k in range(n):
        to_k = np.zeros(1)
        for j in range(k):
            to_k = np.concatenate([to_k, to_k + w[k, j]])
        vol = np.concatenate([vol, vol + deg[k]])
        inner = np.concatenate([inner, inner + to_k + 0.5 * w[k, k]])
    # cut(S) = vol(S) - sum_{v,w in S} w(v,w) (ordered pairs, loops once)
    cut = vol - 2.0 * inner
    return vol, cut


def _lexmin_mask(masks: np.ndarray) -> int:
    """Mask whose sorted member tuple is lexicographically smallest."""
    idx = np.arange(masks.size)
    rest = masks.copy()
    while idx.size > 1:
        if np.any(rest == 0):
            return int(masks[idx[np.nonzero(rest == 0)[0][0]]])
        low = rest & -rest
        keep = low == low.min()
        idx, rest = idx[keep], rest[keep] ^ low[keep]
    return int(masks[idx[0]])


def brute_force_weighted(w: np.ndarray, deg: np.ndarray) -> tuple[float, tuple[int, ...]]:
    """Exact ``min w(S,S') w(V) / (deg(S) deg(S'))`` over ``0 < deg(S) <= w(V)/2``.

    Ties are broken towards the lexicographically smallest side.
    """
    n = w.shape[0]
    if n > 24:
        raise ValueError(f"brute force is limited to n <= 24, got {n}")
    vol, cut = _subset_tables(np.asarray(w, dtype=float), np.asarray(deg, dtype=float))
    total = float(vol[-1])
    masks = np.arange(vol.size, dtype=np.int64)
    ok = (vol > 0) & (2.0 * vol <= total) & (masks != masks[-1])
    phi = np.full(vol.size, np.inf)
    phi[ok] = cut[ok] * total / (vol[ok] * (total - vol[ok]))
    best = phi.min()
    mask = _lexmin_mask(masks[phi == best])
    side = tuple(i for i in range(n) if mask >> i & 1)
    return float(best), side


def brute_force_cut(g: Graph) -> Cut:
    _, side = brute_force_weighted(g.adjacency.astype(float), g.degrees.astype(float))
    return _exact_side(g, side)


def best_cut(g: Graph, mode: str = "auto") -> CutSearchResult:
    """Lowest-conductance cut found by ``mode`` in ``{auto, sweep, brute_force}``.

    ``auto`` is exhaustive for ``n <= 20`` and a spectral sweep otherwise.
    A sweep result carries ``certified_ratio = phi(found) / (1 - lambda_2)``,
    an upper bound on ``phi(found) / phi(G)`` since ``1 - lambda_2 <= phi(G)``
    for the lazy walk.
    """
    if mode == "auto":
        mode = "brute_force" if g.n <= BRUTE_FORCE_MAX_N else "sweep"
    if mode == "brute_force":
        return CutSearchResult(brute_force_cut(g), "brute_force", certified_ratio=1.0)
    if mode == "sweep":
        lam, f = second_eigenpair(g)
        cut = sweep_cut(g, f)
        gap = 1.0 - lam
        ratio = cut.conductance / gap if gap > 0 else None
        return CutSearchResult(cut, "sweep", certified_ratio=ratio, eigenvalue=lam)
    raise ValueError(f"unknown cut mode {mode!r}")
