"""
Custom exception classes and standardized error reports for the semzk toolkit.
Every failure maps to a process exit code: 1 for invalid input, 2 for numerical failure.
"""

import logging
import traceback
from typing import Any, Dict, Optional

import pydantic

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2


class SemzkError(Exception):
    """Base exception class for the toolkit."""

    def __init__(
        self,
        message: str,
        error_code: str = "SEMZK_ERROR",
        exit_code: int = EXIT_VALIDATION,
        details: Optional[Dict[str, Any]] = None
    ):
        self.message = message
        self.error_code = error_code
        self.exit_code = exit_code
        self.details = details or {}
        super().__init__(self.message)


class ValidationError(SemzkError):
    """Input or precondition violations."""

    def __init__(self, message: str = "Validation failed", details: Optional[Dict[str, Any]] = None):
        super().__init__(
            message=message,
            error_code="VALIDATION_ERROR",
            exit_code=EXIT_VALIDATION,
            details=details
        )


class AdmissibilityError(SemzkError):
    """Carleman parameters outside the admissible range."""

    def __init__(self, message: str = "alpha below admissibility", details: Optional[Dict[str, Any]] = None):
        super().__init__(
            message=message,
            error_code="ADMISSIBILITY_ERROR",
            exit_code=EXIT_VALIDATION,
            details=details
        )


class SupportViolationError(SemzkError):
    """Test function support leaves the admissible region."""

    def __init__(self, message: str = "support violation", details: Optional[Dict[str, Any]] = None):
        super().__init__(
            message=message,
            error_code="SUPPORT_VIOLATION",
            exit_code=EXIT_VALIDATION,
            details=details
        )


class NonCompactSupportError(SemzkError):
    """A function required to be compactly supported in space is not."""

    def __init__(self, message: str = "non-compact support", details: Optional[Dict[str, Any]] = None):
        super().__init__(
            message=message,
            error_code="NON_COMPACT_SUPPORT",
            exit_code=EXIT_VALIDATION,
            details=details
        )


class DomainError(SemzkError):
    """Requested region does not fit inside the periodic domain."""

    def __init__(self, message: str = "region exceeds domain", details: Optional[Dict[str, Any]] = None):
        super().__init__(
            message=message,
            error_code="DOMAIN_ERROR",
            exit_code=EXIT_VALIDATION,
            details=details
        )


class InsufficientDataError(SemzkError):
    """Not enough usable data for a fit or a finite difference."""

    def __init__(self, message: str = "insufficient data", details: Optional[Dict[str, Any]] = None):
        super().__init__(
            message=message,
            error_code="INSUFFICIENT_DATA",
            exit_code=EXIT_VALIDATION,
            details=details
        )


class SnapshotFormatError(SemzkError):
    """Malformed field snapshot file."""

    def __init__(self, message: str = "bad snapshot file", details: Optional[Dict[str, Any]] = None):
        super().__init__(
            message=message,
            error_code="SNAPSHOT_FORMAT_ERROR",
            exit_code=EXIT_VALIDATION,
            details=details
        )


class NumericalError(SemzkError):
    """Numerical failures during evaluation."""

    def __init__(
        self,
        message: str = "Numerical failure",
        error_code: str = "NUMERICAL_ERROR",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(
            message=message,
            error_code=error_code,
            exit_code=EXIT_NUMERICAL,
            details=details
        )


class NonFiniteError(NumericalError):
    """NaN or Inf encountered in data."""

    def __init__(self, message: str = "non-finite values", details: Optional[Dict[str, Any]] = None):
        super().__init__(message=message, error_code="NON_FINITE", details=details)


class OverflowGuardError(NumericalError):
    """An exponent exceeded the configured cap."""

    def __init__(self, message: str = "exponent exceeds cap", details: Optional[Dict[str, Any]] = None):
        super().__init__(message=message, error_code="OVERFLOW_GUARD", details=details)


class ConservationDriftError(NumericalError):
    """A conserved quantity drifted beyond tolerance in strict mode."""

    def __init__(self, message: str = "invariant drift", details: Optional[Dict[str, Any]] = None):
        super().__init__(message=message, error_code="CONSERVATION_DRIFT", details=details)


def create_error_report(error: Exception, include_traceback: bool = False) -> Dict[str, Any]:
    """Create standardized error report."""

    if isinstance(error, SemzkError):
        report = {
            "error": {
                "code": error.error_code,
                "message": error.message,
                "exit_code": error.exit_code,
                "details": error.details
            }
        }
    else:
        report = {
            "error": {
                "code": "INTERNAL_ERROR",
                "message": "An unexpected error occurred",
                "exit_code": EXIT_NUMERICAL,
                "details": {"original_error": str(error)}
            }
        }

    if include_traceback:
        report["error"]["traceback"] = traceback.format_exc()

    return report


def format_reason(error: SemzkError) -> str:
    """Single-line machine-parsable reason for the diagnostic stream."""
    message = " ".join(error.message.split())
    return f"{error.error_code}: {message}"


def from_pydantic(exc: pydantic.ValidationError, context: str = "config") -> ValidationError:
    """Convert a pydantic validation error into a toolkit ValidationError."""
    # Toolkit errors raised inside validators keep their identity.
    validation_errors = []
    for error in exc.errors():
        validation_errors.append({
            "field": " -> ".join(str(x) for x in error["loc"]),
            "message": error["msg"],
            "type": error["type"]
        })

    first = validation_errors[0] if validation_errors else {"field": context, "message": "invalid"}
    return ValidationError(
        message=f"{context}: {first['field']}: {first['message']}",
        details={
            "validation_errors": validation_errors,
            "error_count": len(validation_errors)
        }
    )


class ErrorContext:
    """Context manager that re-raises foreign exceptions as toolkit errors."""

    def __init__(self, operation: str, error_class: type = NumericalError):
        self.operation = operation
        self.error_class = error_class

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if exc_type is None or issubclass(exc_type, SemzkError):
            return False

        if issubclass(exc_type, pydantic.ValidationError):
            raise from_pydantic(exc_val, self.operation) from exc_val

        if issubclass(exc_type, (FloatingPointError, OverflowError)):
            raise NonFiniteError(
                message=f"{self.operation}: {exc_val}",
                details={"exception_type": exc_type.__name__}
            ) from exc_val

        logger.error(f"Unexpected error in {self.operation}: {exc_type.__name__} - {exc_val}")
        raise self.error_class(
            message=f"{self.operation}: {exc_val}",
            details={"exception_type": exc_type.__name__}
        ) from exc_val
