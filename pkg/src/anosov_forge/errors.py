"""Exceptions raised by anosov-forge operations.

Mathematical outcomes (witnesses, counterexamples) are returned as result
models; exceptions are reserved for violated preconditions and exhausted
searches.
"""

from typing import Any


class ForgeError(Exception):
    """Base class for all anosov-forge errors."""


class ValidationError(ForgeError, ValueError):
    """Malformed arguments or parameters outside their admissible range."""


class RankMismatchError(ValidationError):
    """Words or representations over different free-group ranks."""


class SingularMatrixError(ForgeError, ZeroDivisionError):
    """Inversion of a matrix with zero determinant."""


class NotLoxodromicError(ForgeError):
    """An operation that needs three real eigenvalues of distinct moduli."""


class ParityError(ForgeError):
    """Even root of a matrix with a negative real eigenvalue."""


class EnumerationLimitError(ForgeError):
    """Exhaustive enumeration would exceed the configured product cap."""


class SuspensionError(ForgeError):
    """Inconsistent suspension data or a plane that is not invariant."""


class BoundaryError(ForgeError):
    """A comparison fell within tolerance of its decision boundary."""


class HypothesisError(ForgeError):
    """A named hypothesis of a construction failed."""

    def __init__(self, check: str, message: str) -> None:
        super().__init__(f"{check}: {message}")
        self.check = check


class SearchExhaustedError(ForgeError):
    """A bounded search ended without a hit; carries the trace observed."""

    def __init__(self, message: str, trace: list[Any] | None = None) -> None:
        super().__init__(message)
        self.trace = trace or []
