"""Exception hierarchy for spdgeo."""

from typing import Any, Dict, Optional


class SpdGeoError(Exception):
    """Base class for all library errors."""

    exit_code: int = 3

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = details

    def to_dict(self) -> Dict[str, Any]:
        """Machine-readable form used by the CLI on stderr."""
        payload: Dict[str, Any] = {
            "error": type(self).__name__,
            "message": self.message,
            "exit_code": self.exit_code,
        }
        payload.update(self.details)
        return payload


class DomainError(SpdGeoError, ValueError):
    """An argument lies outside the domain of an operation."""


class DimensionMismatchError(DomainError):
    """Matrix arguments have incompatible dimensions."""

    def __init__(self, expected: int, actual: int, what: str = "matrix"):
        super().__init__(
            f"Dimension mismatch for {what}: expected {expected}, got {actual}",
            expected=expected,
            actual=actual,
        )


class PreconditionError(DomainError):
    """A documented precondition does not hold."""


class NumericalFailureError(SpdGeoError, ArithmeticError):
    """A numerical kernel failed (eigensolver breakdown, non-finite output)."""

    def __init__(
        self,
        message: str,
        dimension: Optional[int] = None,
        condition: Optional[float] = None,
        **details: Any,
    ):
        super().__init__(message, dimension=dimension, condition=condition, **details)
        self.dimension = dimension
        self.condition = condition


class NonConvergenceError(NumericalFailureError):
    """An iteration hit its budget before meeting its tolerance."""

    def __init__(self, message: str, iterations: int, residual: float, **details: Any):
        super().__init__(message, iterations=iterations, residual=residual, **details)
        self.iterations = iterations
        self.residual = residual


class UnknownCheckError(SpdGeoError, KeyError):
    """The requested verification check is not in the catalog."""

    exit_code = 2

    def __str__(self) -> str:
        return self.message
