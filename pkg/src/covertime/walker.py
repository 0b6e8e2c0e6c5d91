"""Monte Carlo random walks: cover times, block-move counts, collapsed traces.

Every trial draws its randomness from its own Philox stream keyed by
``(seed, trial)``, so results do not depend on batching or thread count.
Batches of trials advance in lockstep with vectorised numpy steps.
"""

from __future__ import annotations

import csv
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import BudgetError
from .graph import Graph, min_degree_ratio


class CoverageWarning(UserWarning):
    pass


@dataclass(frozen=True)
class WalkConfig:
    seed: int = 0
    lazy: bool = False
    max_steps: int | None = None
    trials: int = 1000
    chunk: int = 1024
    workers: int = 1

    def resolved_max_steps(self, g: Graph) -> int:
        if self.max_steps is not None:
            return int(self.max_steps)
        theta = min_degree_ratio(g).theta
        return int(math.ceil(50 * g.n * math.log(g.n) / theta))


def trial_generator(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(trial)])))


@dataclass
class TrialStats:
    cover_times: np.ndarray | None = None
    censored: np.ndarray | None = None
    kappa_samples: np.ndarray | None = None
    visit_counts: np.ndarray | None = None
    max_steps: int = 0

    def _values(self) -> np.ndarray:
        if self.cover_times is not None:
            return self.cover_times.astype(float)
        return self.kappa_max.astype(float)

    @property
    def kappa_max(self) -> np.ndarray:
        return self.kappa_samples.max(axis=1)

    @property
    def trials(self) -> int:
        return int(self._values().size)

    @property
    def mean(self) -> float:
        return float(self._values().mean())

    @property
    def variance(self) -> float:
        v = self._values()
        return float(v.var(ddof=1)) if v.size > 1 else 0.0

    @property
    def half_width(self) -> float:
        """95% normal half-width of the mean."""
        return 1.96 * math.sqrt(self.variance / self.trials)

    @property
    def n_censored(self) -> int:
        return int(self.censored.sum()) if self.censored is not None else 0

    @property
    def upper_ci(self) -> float:
        # censored values are recorded at max_steps, so the mean is only a lower bound
        return math.inf if self.n_censored else self.mean + self.half_width

    @property
    def lower_ci(self) -> float:
        return self.mean - self.half_width

    def summary(self) -> dict:
        return {
            "trials": self.trials,
            "mean": self.mean,
            "variance": self.variance,
            "half_width": self.half_width,
            "censored": self.n_censored,
            "upper_ci": self.upper_ci,
        }


def _step(offsets, targets, deg, cur, u, lazy):
    if lazy:
        stay = u < 0.5
        r = np.maximum(2.0 * u - 1.0, 0.0)
        nxt = targets[offsets[cur] + (r * deg[cur]).astype(np.int64)]
        return np.where(stay, cur, nxt)
    return targets[offsets[cur] + (u * deg[cur]).astype(np.int64)]


def _fan_out(trials: int, workers: int, batch: Callable[[np.ndarray], tuple]) -> list[tuple]:
    ids = np.arange(trials)
    if workers <= 1 or trials < 2:
        return [batch(ids)]
    parts = [p for p in np.array_split(ids, workers) if p.size]
    with ThreadPoolExecutor(max_workers=len(parts)) as pool:
        return list(pool.map(batch, parts))


def _cover_batch(g: Graph, u: int, ids: np.ndarray, cfg: WalkConfig, max_steps: int) -> tuple[np.ndarray]:
    offsets, targets = g.csr
    deg = g.degrees
    n = g.n
    gens = [trial_generator(cfg.seed, t) for t in ids]
    k = ids.size
    cur = np.full(k, u, dtype=np.int64)
    visited = np.zeros((k, n), dtype=bool)
    visited[:, u] = True
    count = np.ones(k, dtype=np.int64)
    done = np.full(k, -1, dtype=np.int64)
    active = np.arange(k)
    t = 0
    while active.size and t < max_steps:
        steps = min(cfg.chunk, max_steps - t)
        U = np.stack([gens[i].random(steps) for i in active])
        c, vis, cnt, dn = cur[active], visited[active], count[active], done[active]
        rows = np.arange(active.size)
        for j in range(steps):
            c = _step(offsets, targets, deg, c, U[:, j], cfg.lazy)
            new = ~vis[rows, c]
            vis[rows, c] = True
            cnt += new
            dn[(cnt == n) & (dn < 0)] = t + j + 1
        cur[active], visited[active], count[active], done[active] = c, vis, cnt, dn
        t += steps
        active = active[dn < 0]
    return (done,)


def simulate_cover(g: Graph, u: int, cfg: WalkConfig = WalkConfig()) -> TrialStats:
    """Cover times of ``cfg.trials`` independent walks started at ``u``.

    Censored trials (not covered within ``max_steps``) are recorded at
    ``max_steps`` and flagged.
    """
    if not 0 <= u < g.n:
        raise ValueError(f"start vertex {u} outside the graph")
    max_steps = cfg.resolved_max_steps(g)
    parts = _fan_out(cfg.trials, cfg.workers, lambda ids: _cover_batch(g, u, ids, cfg, max_steps))
    done = np.concatenate([p[0] for p in parts])
    censored = done < 0
    if censored.all():
        raise BudgetError(f"all {done.size} trials censored at max_steps={max_steps}")
    times = np.where(censored, max_steps, done)
    return TrialStats(cover_times=times, censored=censored, max_steps=max_steps)


def _kappa_batch(g, u, block_of, tau, ids, cfg, max_steps):
    offsets, targets = g.csr
    deg = g.degrees
    s = tau.size
    gens = [trial_generator(cfg.seed, t) for t in ids]
    k = ids.size
    cur = np.full(k, u, dtype=np.int64)
    moves = np.zeros((k, s), dtype=np.int64)
    kappa = np.where(tau[None, :] == 0, 0, -1).repeat(k, axis=0)
    active = np.nonzero((kappa < 0).any(axis=1))[0]
    t = 0
    while active.size and t < max_steps:
        steps = min(cfg.chunk, max_steps - t)
        U = np.stack([gens[i].random(steps) for i in active])
        c, mv, kp = cur[active], moves[active], kappa[active]
        rows = np.arange(active.size)
        for j in range(steps):
            b = block_of[c]
            mv[rows, b] += 1
            hit = (mv[rows, b] == tau[b]) & (kp[rows, b] < 0)
            kp[rows[hit], b[hit]] = t + j + 1
            c = _step(offsets, targets, deg, c, U[:, j], cfg.lazy)
        cur[active], moves[active], kappa[active] = c, mv, kp
        t += steps
        active = active[(kp < 0).any(axis=1)]
    return kappa, moves


def measure_kappa(
    g: Graph,
    u: int,
    blocks: Sequence[Sequence[int]],
    tau_targets: Sequence[int],
    cfg: WalkConfig = WalkConfig(),
) -> TrialStats:
    """Steps needed for ``tau_i`` moves out of each block ``i``, per trial.

    A move out of block ``i`` is any step that departs from a vertex of the
    block (including lazy stays). ``kappa_samples[trial, i]`` is the step
    index of the ``tau_i``-th such move; ``kappa_max`` is the row maximum.
    """
    block_of = np.full(g.n, -1, dtype=np.int64)
    for i, b in enumerate(blocks):
        block_of[list(b)] = i
    if (block_of < 0).any():
        raise ValueError("blocks must cover every vertex")
    tau = np.asarray([int(math.ceil(x)) for x in tau_targets], dtype=np.int64)
    max_steps = cfg.resolved_max_steps(g)
    parts = _fan_out(cfg.trials, cfg.workers, lambda ids: _kappa_batch(g, u, block_of, tau, ids, cfg, max_steps))
    kappa = np.concatenate([p[0] for p in parts])
    moves = np.concatenate([p[1] for p in parts])
    censored = (kappa < 0).any(axis=1)
    if censored.all():
        raise BudgetError(f"all {kappa.shape[0]} trials censored at max_steps={max_steps}")
    kappa = np.where(kappa < 0, max_steps, kappa)
    return TrialStats(kappa_samples=kappa, censored=censored, visit_counts=moves, max_steps=max_steps)


def _single_walk(g: Graph, start: int, steps: int, cfg: WalkConfig, trial: int = 0):
    """Yield successive vertices ``X(1), X(2), ...`` of one trajectory."""
    offsets, targets = g.csr
    nbrs = [targets[offsets[v] : offsets[v + 1]].tolist() for v in range(g.n)]
    deg = g.degrees.tolist()
    gen = trial_generator(cfg.seed, trial)
    v = start
    lazy = cfg.lazy
    left = steps
    while left > 0:
        batch = min(left, 1 << 16)
        for r in gen.random(batch).tolist():
            if lazy:
                if r < 0.5:
                    yield v
                    continue
                r = 2.0 * r - 1.0
            v = nbrs[v][int(r * deg[v])]
            yield v
        left -= batch


def empirical_collapsed(
    g: Graph,
    block: Sequence[int],
    cfg: WalkConfig = WalkConfig(),
    transitions: int = 10**6,
    min_row: int = 100,
) -> tuple[np.ndarray, np.ndarray]:
    """Empirical transition matrix of one trajectory restricted to ``block``.

    Runs a single walk, keeps only the times it is inside the block, and
    counts consecutive pairs until ``transitions`` pairs have been observed
    (or ``max_steps`` is exhausted). Rows follow the sorted block order.
    Returns ``(frequencies, row_counts)``; rows with fewer than ``min_row``
    observations trigger a ``CoverageWarning``.
    """
    members = sorted(set(int(v) for v in block))
    pos = np.full(g.n, -1, dtype=np.int64)
    pos[members] = np.arange(len(members))
    where = pos.tolist()
    counts = np.zeros((len(members), len(members)), dtype=np.int64)
    prev = where[members[0]]
    seen = 0
    budget = cfg.max_steps if cfg.max_steps is not None else 100 * transitions * max(1, g.n // len(members))
    for v in _single_walk(g, members[0], budget, cfg):
        k = where[v]
        if k < 0:
            continue
        counts[prev, k] += 1
        prev = k
        seen += 1
        if seen >= transitions:
            break
    rows = counts.sum(axis=1)
    thin = np.nonzero(rows < min_row)[0]
    if thin.size:
        warnings.warn(
            f"{thin.size} block rows have fewer than {min_row} observations: "
            + ", ".join(f"{members[i]}:{rows[i]}" for i in thin[:10]),
            CoverageWarning,
            stacklevel=2,
        )
    freq = counts / np.maximum(rows, 1)[:, None]
    return freq, rows


def occupancy(g: Graph, steps: int, cfg: WalkConfig = WalkConfig(), start: int = 0) -> np.ndarray:
    """Fraction of time spent at each vertex over ``steps`` steps."""
    counts = np.zeros(g.n, dtype=np.int64)
    seq = np.fromiter(_single_walk(g, start, steps, cfg), dtype=np.int64, count=steps)
    np.add.at(counts, seq, 1)
    return counts / steps


def write_trials_csv(stats: TrialStats, path: str | os.PathLike) -> None:
    """Dump per-trial values as ``trial,quantity,value`` rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["trial", "quantity", "value"])
        if stats.cover_times is not None:
            for t, (val, cen) in enumerate(zip(stats.cover_times.tolist(), stats.censored.tolist())):
                w.writerow([t, "cover_time", val])
                w.writerow([t, "censored", int(cen)])
        if stats.kappa_samples is not None:
            for t, row in enumerate(stats.kappa_samples.tolist()):
                for i, val in enumerate(row):
                    w.writerow([t, f"kappa_{i}", val])
                w.writerow([t, "kappa_max", max(row)])
