"""Exception hierarchy."""

from __future__ import annotations


class ZenoSteerError(Exception):
    """Base class for all package errors."""


class ValidationError(ZenoSteerError, ValueError):
    """An operator or state failed its type invariants."""


class DimensionError(ValidationError):
    """Operands have incompatible dimensions."""


class CapacityError(ZenoSteerError):
    """A dimension or step count exceeds a hard limit."""


class NumericalError(ZenoSteerError, ArithmeticError):
    """A numerical routine failed to converge or produced unusable output."""


class ClusteringError(NumericalError):
    """Eigenphase grouping is ambiguous at the requested tolerance."""

    def __init__(self, message: str, gap: float):
        super().__init__(message)
        self.gap = gap


class BranchError(NumericalError):
    """A matrix logarithm is too close to its branch cut."""


class DomainError(ZenoSteerError, ValueError):
    """Scalar argument outside the function's domain."""


class NonAnalyticScheduleError(ZenoSteerError, ValueError):
    """Residual checks need a schedule with polynomial entries."""


class UnsupportedWeightError(ZenoSteerError, TypeError):
    """Weight function is not from the supported analytic family."""


class ScenarioError(ValidationError):
    """Scenario document failed schema or invariant checks.

    ``violations`` holds ``(field_path, message)`` pairs.
    """

    def __init__(self, violations: list[tuple[str, str]]):
        self.violations = list(violations)
        lines = [f"{path}: {msg}" for path, msg in self.violations]
        super().__init__("invalid scenario:\n  " + "\n  ".join(lines))


class PreconditionError(ScenarioError):
    """A physical precondition of a steering run does not hold."""


class InvariantViolation(ZenoSteerError):
    """A computed result breaks a guaranteed scientific invariant."""
