"""Exception hierarchy.

Input problems (``InputError``) map to CLI exit code 2, regime problems
(``RegimeError``) to exit code 3.
"""

from __future__ import annotations


class CoverTimeError(Exception):
    """Base class for every error raised by this package."""


class InputError(CoverTimeError):
    pass


class InvalidGraphError(InputError):
    pass


class InvalidCutError(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RegimeError(CoverTimeError):
    """The input lies outside the regime an estimate is valid for."""


class SolverFailure(RegimeError):
    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(f"{message} (residual={residual:.3e})")


class PartitionDivergence(RegimeError):
    pass


class DegenerateSplit(RegimeError):
    def __init__(self, message: str, block: tuple[int, ...]):
        self.block = block
        super().__init__(message)


class MixingTooSlow(RegimeError):
    pass


class TpiViolation(RegimeError):
    pass


class HypothesisViolation(RegimeError):
    pass


class AbsorbingEscape(RegimeError):
    pass


class BudgetError(RegimeError):
    pass


class PrecisionError(RegimeError):
    def __init__(self, message: str, half_width: float):
        self.half_width = half_width
        super().__init__(f"{message} (half_width={half_width:.4g})")
