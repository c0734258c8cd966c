"""Custom exception classes for jumpsnakes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional


# -- JumpsnakesError
class JumpsnakesError(Exception):
    """Base exception class for all jumpsnakes errors.

    Callers can catch this to handle any library failure, or one of the
    specific subtypes below.
    """
    pass


class DimensionError(JumpsnakesError, ValueError):
    """Raised when array or mark-vector dimensions disagree."""
    pass


class EmptyBundleError(JumpsnakesError, ValueError):
    """Raised when a noise bundle is requested with zero paths."""
    pass


class NoiseIndexError(JumpsnakesError, IndexError):
    """Raised when a path or step index lies outside a noise bundle."""
    pass


class InvalidParameterError(JumpsnakesError, ValueError):
    """Raised when a numerical parameter (weight, level, tolerance) lies outside its domain."""
    pass


class ConfigurationError(JumpsnakesError, ValueError):
    """Raised for malformed or invalid run configurations.

    The message names the file and, where it can be located, the line.
    """
    pass


# -- ProblemError
class ProblemError(JumpsnakesError):
    """Base exception class for problem declaration and registry errors."""
    pass


class ProblemNotFoundError(ProblemError, ValueError):
    """Raised when a builtin problem name is not in the registry."""
    pass


class ValidationFailure(ProblemError):
    """Raised when declared derivatives disagree with finite differences.

    The full `ValidationReport` is attached as `report`.
    """

    def __init__(self, message: str, report: Any = None) -> None:
        super().__init__(message)
        self.report = report


# -- SolverError
class SolverError(JumpsnakesError):
    """Base exception class for numerical solver failures."""
    pass


class DivergenceError(SolverError):
    """Raised when a simulated state becomes non-finite."""

    def __init__(self, message: str, path: Optional[int] = None, step: Optional[int] = None) -> None:
        super().__init__(message)
        self.path = path
        self.step = step


class RegressionError(SolverError):
    """Raised when a regression normal matrix cannot be factorized."""
    pass


class ImplicitStepError(SolverError):
    """Raised when the implicit inner fixed point of a backward step fails."""
    pass


class ContractionError(SolverError):
    """Raised when Picard distances grow for several consecutive iterations."""
    pass


class NotConvergedError(SolverError):
    """Raised when a non-converged solution is used without an override."""
    pass


class FixedPointError(SolverError):
    """Raised when the spike shift fixed point does not converge."""
    pass


class BoundednessError(SolverError):
    """Raised when an adjoint exceeds its configured cap in strict mode."""
    pass


# -- SingularityError
@dataclass(frozen=True)
class GuardViolation:
    """A denominator guard that failed at one (t, path, mark) location."""
    t: float
    path: int
    mark: int
    guard_name: str
    value: float


class SingularityError(JumpsnakesError, ArithmeticError):
    """Raised when an adjoint denominator guard fails.

    `violations` holds every failing location found in the offending step.
    """

    def __init__(self, message: str, violations: Optional[list[GuardViolation]] = None) -> None:
        super().__init__(message)
        self.violations: list[GuardViolation] = list(violations or [])
