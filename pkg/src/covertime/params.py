"""Finite-n materialisations of the asymptotic parameters and slacks."""

from __future__ import annotations

import math

ZETA_FLOOR = 0.05
OMEGA_FLOOR = 10.0


def psi(n: int) -> float:
    return 1.0 / math.log(n) ** (2.0 / 3.0)


def default_zeta(n: int, theta: float) -> float:
    """Conductance threshold ``max(n^(-theta*psi), 0.05)``."""
    return max(n ** (-theta * psi(n)), ZETA_FLOOR)


def default_omega(n: int, theta: float) -> float:
    """Mixing accuracy ``max(n^(3*theta*psi), 10)``."""
    return max(n ** (3.0 * theta * psi(n)), OMEGA_FLOOR)


def eps1(n: int) -> float:
    return 1.0 / math.sqrt(math.log(n))


def eps2(n: int) -> float:
    return 1.0 / math.log(n) ** 0.25


def upper_factor(n: int, theta: float) -> float:
    """Multiplicative upper slack ``1 + 2/(theta log n)`` on t*."""
    return 1.0 + 2.0 / (theta * math.log(n))
