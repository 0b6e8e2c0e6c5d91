"""Dense transition-matrix machinery for the lazy walk.

Mixing times are found exactly from matrix powers, non-visit probabilities
from powers of the taboo matrix, and the first-visit rate ``p_v`` from the
truncated return sum ``R_v``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .errors import MixingTooSlow, RegimeError, TpiViolation
from .graph import Graph, min_degree_ratio, stationary

MIXING_CAP = 10**6
# lambda = 1/(K T) in the additive slack term; K is "a large constant"
SLACK_K = 10.0
# |xi| <= XI_CONST / omega: max of omega * (relative error) at omega = 20 over the
# n <= 12 suite graphs whose found conductance clears the default zeta, rounded
# up and frozen (recomputed in tests/test_markov.py). It is large because no
# graph that small can satisfy T pi_v <= 1/omega.
XI_CONST = 1842.0


class ChainMatrices:
    """Lazy walk ``P = (I + D^-1 A) / 2`` with its stationary vector.

    Powers ``P^(2^k)`` are cached on first use; the cache is guarded by a lock
    so concurrent readers only ever see complete checkpoints.
    """

    def __init__(self, graph: Graph):
        self.graph = graph
        d = graph.degrees.astype(float)
        simple = graph.adjacency / d[:, None]
        self.P_simple = simple
        self.P = 0.5 * np.eye(graph.n) + 0.5 * simple
        self.pi = stationary(graph)
        for arr in (self.P, self.P_simple, self.pi):
            arr.setflags(write=False)
        self._squares: list[np.ndarray] = [self.P]
        self._lock = threading.Lock()

    @property
    def n(self) -> int:
        return self.graph.n

    def square(self, k: int) -> np.ndarray:
        """``P^(2^k)``."""
        with self._lock:
            while len(self._squares) <= k:
                last = self._squares[-1]
                nxt = last @ last
                nxt.setflags(write=False)
                self._squares.append(nxt)
            return self._squares[k]

    def power(self, t: int) -> np.ndarray:
        if t < 0:
            raise ValueError("t must be non-negative")
        out = np.eye(self.n)
        k = 0
        while t:
            if t & 1:
                out = out @ self.square(k)
            t >>= 1
            k += 1
        return out

    def relative_distance(self, t: int) -> float:
        """``max_{u,x} |P^t(u,x) - pi_x| / pi_x``."""
        return _relative_distance(self.power(t), self.pi)

    def row_sum_residual(self) -> float:
        return float(np.max(np.abs(self.P.sum(axis=1) - 1.0)))

    def stationarity_residual(self) -> float:
        return float(np.max(np.abs(self.pi @ self.P - self.pi)))

    def reversibility_residual(self) -> float:
        flow = self.pi[:, None] * self.P
        return float(np.max(np.abs(flow - flow.T)))


def _relative_distance(m: np.ndarray, pi: np.ndarray) -> float:
    return float(np.max(np.abs(m - pi[None, :]) / pi[None, :]))


def build_chain(g: Graph) -> ChainMatrices:
    return ChainMatrices(g)


@dataclass(frozen=True)
class MixingCertificate:
    T_exact: int
    T_cheeger: float
    omega: float
    conductance: float
    rigorous: bool

    def to_dict(self) -> dict:
        return {
            "T_exact": self.T_exact,
            "T_cheeger": self.T_cheeger,
            "omega": self.omega,
            "conductance": self.conductance,
            "rigorous": self.rigorous,
        }


def exact_mixing_time(c: ChainMatrices, omega: float, cap: int = MIXING_CAP) -> int:
    """Smallest ``t`` with relative pointwise distance ``<= 1/omega``.

    The distance is non-increasing in ``t`` (each step averages rows), so
    doubling by repeated squaring followed by bisection is exact.
    """
    if omega <= 1:
        raise ValueError("omega must exceed 1")
    target = 1.0 / omega
    if _relative_distance(np.eye(c.n), c.pi) <= target:
        return 0
    k = 0
    while _relative_distance(c.square(k), c.pi) > target:
        k += 1
        if 2 ** (k - 1) > cap:
            raise MixingTooSlow(f"mixing time exceeds the cap of {cap} steps")
    lo, hi = (2 ** (k - 1), 2**k) if k else (0, 1)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if c.relative_distance(mid) <= target:
            hi = mid
        else:
            lo = mid
    if hi > cap:
        raise MixingTooSlow(f"mixing time {hi} exceeds the cap of {cap} steps")
    return hi


def cheeger_time(n: int, theta: float, omega: float, phi: float) -> float:
    """``8 log(omega n / theta) / phi^2``."""
    return 8.0 * math.log(omega * n / theta) / phi**2


def mixing_time(c: ChainMatrices, omega: float, cap: int = MIXING_CAP, cut_mode: str = "auto") -> MixingCertificate:
    """Exact mixing time plus the conductance-based bound.

    The bound uses the exact conductance when the graph is small enough for
    exhaustive search. Otherwise the sweep value (an upper bound on the true
    conductance) is used and the certificate is marked non-rigorous.
    """
    from .spectral import best_cut

    found = best_cut(c.graph, cut_mode)
    theta = min_degree_ratio(c.graph).theta
    return MixingCertificate(
        T_exact=exact_mixing_time(c, omega, cap),
        T_cheeger=cheeger_time(c.n, theta, omega, found.cut.conductance),
        omega=omega,
        conductance=found.cut.conductance,
        rigorous=found.method == "brute_force",
    )


def _taboo(c: ChainMatrices, v: int) -> np.ndarray:
    q = np.array(c.P)
    q[v, :] = 0.0
    q[:, v] = 0.0
    return q


def taboo_nonvisit_prob(c: ChainMatrices, u: int, v: int, t: int) -> float:
    """Probability that the lazy walk from ``u`` avoids ``v`` at steps ``1..t``."""
    if u == v:
        raise ValueError("u and v must differ")
    if t < 0:
        raise ValueError("t must be non-negative")
    q = _taboo(c, v)
    x = np.zeros(c.n)
    x[u] = 1.0
    for _ in range(t):
        x = x @ q
    return float(x.sum())


def taboo_nonvisit_curve(c: ChainMatrices, v: int, t_max: int) -> np.ndarray:
    """Array ``S[t, u]`` of non-visit probabilities for all starts ``u`` and ``t <= t_max``.

    Column ``v`` is meaningless and set to zero.
    """
    q = _taboo(c, v)
    out = np.empty((t_max + 1, c.n))
    surv = np.ones(c.n)
    surv[v] = 0.0
    out[0] = surv
    for t in range(1, t_max + 1):
        surv = q @ surv
        out[t] = surv
    return out


def return_sum(c: ChainMatrices, v: int, T: int, lazy: bool = True) -> float:
    """``R_T(1) = sum_{t<T} r_t`` with ``r_0 = 1``.

    ``lazy=False`` evaluates the same sum for the simple (non-lazy) walk, the
    walk the bound ``1 <= R_v <= 1 + T/(theta n)`` is stated for.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    kernel = c.P if lazy else c.P_simple
    x = np.zeros(c.n)
    x[v] = 1.0
    total = 0.0
    for _ in range(T):
        total += x[v]
        x = x @ kernel
    return total


@dataclass(frozen=True)
class FirstVisitEstimate:
    v: int
    T: int
    omega: float
    pi_v: float
    R_v: float
    R_v_simple: float
    p_v: float
    xi_bound: float
    tpi_holds: bool

    def survival(self, t) -> np.ndarray | float:
        """``(1 + p_v)^-t``, the central estimate of ``Pr(A_t(v))``."""
        return (1.0 + self.p_v) ** (-np.asarray(t, dtype=float))

    def additive_slack(self, t) -> np.ndarray | float:
        """``T exp(-lambda t / 2)`` with ``lambda = 1/(K T)``, reported separately."""
        lam = 1.0 / (SLACK_K * self.T)
        return self.T * np.exp(-lam * np.asarray(t, dtype=float) / 2.0)


def first_visit_estimate(c: ChainMatrices, v: int, T: int, omega: float, check_regime: bool = True) -> FirstVisitEstimate:
    """First-visit rate ``p_v = pi_v / R_v`` for the lazy walk.

    With ``check_regime`` the hypotheses are enforced: ``T pi_v <= 1/omega``
    (``TpiViolation``) and the return-sum proxy ``R_v <= 2`` on the simple
    walk (``RegimeError``). Validation code may switch the check off to
    compare the estimate with exact taboo probabilities outside the regime.
    """
    pi_v = float(c.pi[v])
    r_lazy = return_sum(c, v, T, lazy=True)
    r_simple = return_sum(c, v, T, lazy=False)
    tpi = T * pi_v <= 1.0 / omega
    if check_regime:
        if not tpi:
            raise TpiViolation(f"T*pi_v = {T * pi_v:.4g} exceeds 1/omega = {1.0 / omega:.4g}")
        if r_simple > 2.0:
            raise RegimeError(f"return sum R_v = {r_simple:.4g} exceeds 2")
    return FirstVisitEstimate(
        v=v,
        T=T,
        omega=omega,
        pi_v=pi_v,
        R_v=r_lazy,
        R_v_simple=r_simple,
        p_v=pi_v / r_lazy,
        xi_bound=XI_CONST / omega,
        tpi_holds=tpi,
    )


@dataclass(frozen=True)
class FirstVisitOracle:
    """Worst relative gap between ``(1 + p_v)^-t`` and exact non-visit probabilities."""

    omega: float
    T: int
    max_relative_error: float
    worst: tuple[int, int, int]  # (u, v, t)

    @property
    def scaled(self) -> float:
        """``omega * max_relative_error``, the constant the error is measured in."""
        return self.omega * self.max_relative_error


def first_visit_oracle(c: ChainMatrices, omega: float, span: int = 10) -> FirstVisitOracle:
    """Compare the first-visit estimate with taboo probabilities for all ``u != v``, ``t in [T, span T]``.

    ``T`` is the exact mixing time at ``omega``; the regime checks are off,
    since small graphs cannot satisfy ``T pi_v <= 1/omega``.
    """
    T = max(exact_mixing_time(c, omega), 1)
    ts = np.arange(T, span * T + 1)
    worst = (-1.0, (0, 0, 0))
    for v in range(c.n):
        est = first_visit_estimate(c, v, T, omega, check_regime=False)
        exact = taboo_nonvisit_curve(c, v, span * T)[T:]
        approx = est.survival(ts)[:, None]
        others = np.arange(c.n) != v
        rel = np.abs(approx - exact[:, others]) / exact[:, others]
        k = np.unravel_index(int(np.argmax(rel)), rel.shape)
        if rel[k] > worst[0]:
            worst = (float(rel[k]), (int(np.nonzero(others)[0][k[1]]), v, int(ts[k[0]])))
    return FirstVisitOracle(omega, T, worst[0], worst[1])
