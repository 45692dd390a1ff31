"""Exception hierarchy shared by all modules.

Each error carries the CLI exit code it maps to, so front ends never need
to re-classify failures.
"""

from __future__ import annotations


class OptConsError(Exception):
    exit_code = 2


class ValidationError(OptConsError, ValueError):
    """Bad input that violates a documented precondition."""


class InvalidGraphError(ValidationError):
    pass


class InvalidDimensionError(ValidationError):
    pass


class ShapeError(ValidationError):
    pass


class InvalidRangeError(ValidationError):
    pass


class InvalidParameterError(ValidationError):
    pass


class SpectralGapError(ValidationError):
    """The graph has no spectral gap (lambda2 <= 0)."""


class AssumptionError(ValidationError):
    """Graph is not weight-balanced and strongly connected."""


class UnboundedProblemError(ValidationError):
    """Bracket expansion for the optimum ran away; the cost is not coercive."""


class ConfigurationError(ValidationError):
    pass


class ScenarioParseError(OptConsError):
    exit_code = 3


class DivergenceError(OptConsError, ArithmeticError):
    """Non-finite or runaway state during integration."""

    exit_code = 1

    def __init__(self, message: str, *, time: float | None = None, index: int | None = None):
        super().__init__(message)
        self.time = time
        self.index = index
