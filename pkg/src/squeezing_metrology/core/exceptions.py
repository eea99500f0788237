"""
Exception classes for the squeezing metrology toolkit.

Provides specific exception types for invalid physical inputs, malformed data
files and numerical failures, plus the mapping from errors to CLI exit codes.
"""

from datetime import datetime
from typing import Any, Dict, Optional, Type


class SqueezingError(Exception):
    """Base exception class for all squeezing metrology errors."""

    def __init__(
        self,
        message: str,
        error_code: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
        recoverable: bool = True,
    ):
        """
        Initialize SqueezingError.

        Args:
            message: Human-readable error message.
            error_code: Machine-readable error code.
            details: Additional error details.
            recoverable: Whether the error is potentially recoverable.
        """
        super().__init__(message)
        self.message = message
        self.error_code = error_code or self.__class__.__name__
        self.details = details or {}
        self.recoverable = recoverable
        self.timestamp = datetime.now()

    def to_dict(self) -> Dict[str, Any]:
        """Convert exception to dictionary format."""
        return {
            "error_type": self.__class__.__name__,
            "error_code": self.error_code,
            "message": self.message,
            "details": self.details,
            "recoverable": self.recoverable,
            "timestamp": self.timestamp.isoformat(),
        }

    def __str__(self) -> str:
        if self.details:
            return f"{self.message} (Code: {self.error_code}, Details: {self.details})"
        return f"{self.message} (Code: {self.error_code})"


class ConfigurationError(SqueezingError):
    """Raised when there are configuration issues."""

    def __init__(self, message: str, config_section: Optional[str] = None, **kwargs: Any):
        details = kwargs.pop("details", {})
        if config_section:
            details["config_section"] = config_section

        super().__init__(
            message=message,
            error_code="CONFIG_ERROR",
            details=details,
            recoverable=False,
            **kwargs,
        )


class ValidationError(SqueezingError):
    """Raised when input validation fails."""

    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        value: Optional[Any] = None,
        expected: Optional[str] = None,
        **kwargs: Any,
    ):
        details = kwargs.pop("details", {})
        if field:
            details["field"] = field
        if value is not None:
            details["value"] = str(value)
        if expected:
            details["expected"] = expected

        super().__init__(
            message=message,
            error_code="VALIDATION_ERROR",
            details=details,
            recoverable=True,
            **kwargs,
        )


class DimensionMismatchError(ValidationError):
    """Raised when a state and an operator live on different Fock spaces."""

    def __init__(self, expected_dim: int, actual_dim: int, **kwargs: Any):
        details = kwargs.pop("details", {})
        details["expected_dim"] = expected_dim
        details["actual_dim"] = actual_dim
        super().__init__(
            f"Dimension mismatch: expected {expected_dim}, got {actual_dim}",
            details=details,
            **kwargs,
        )


class ZeroStateError(SqueezingError):
    """Raised when a zero vector is used where a physical state is required."""

    def __init__(self, message: str = "State has zero norm", **kwargs: Any):
        super().__init__(message=message, error_code="ZERO_STATE", recoverable=False, **kwargs)


class NumericalError(SqueezingError):
    """Base class for numerical failures."""

    def __init__(self, message: str, error_code: str = "NUMERICAL_ERROR", **kwargs: Any):
        super().__init__(message=message, error_code=error_code, **kwargs)


class IllConditionedError(NumericalError):
    """Raised when a finite-difference estimate divides by a vanishing probability."""

    def __init__(self, message: str, phi: Optional[float] = None, **kwargs: Any):
        details = kwargs.pop("details", {})
        if phi is not None:
            details["phi"] = phi
        super().__init__(message, error_code="ILL_CONDITIONED", details=details, **kwargs)


class ConvergenceError(NumericalError):
    """Raised when an optimizer exhausts its budget without converging."""

    def __init__(
        self,
        message: str,
        evaluations: Optional[int] = None,
        best_so_far: Optional[Any] = None,
        **kwargs: Any,
    ):
        details = kwargs.pop("details", {})
        if evaluations is not None:
            details["evaluations"] = evaluations
        self.best_so_far = best_so_far
        super().__init__(message, error_code="NON_CONVERGENCE", details=details, **kwargs)


class DataParseError(SqueezingError):
    """Raised when an input file cannot be read or parsed."""

    def __init__(
        self,
        message: str,
        file_path: Optional[str] = None,
        line: Optional[int] = None,
        column: Optional[str] = None,
        **kwargs: Any,
    ):
        details = kwargs.pop("details", {})
        if file_path:
            details["file_path"] = file_path
        if line is not None:
            details["line"] = line
        if column is not None:
            details["column"] = column

        super().__init__(
            message=message,
            error_code="PARSE_ERROR",
            details=details,
            recoverable=False,
            **kwargs,
        )


class ExportError(SqueezingError):
    """Raised when data export operations fail."""

    def __init__(
        self,
        message: str,
        export_format: Optional[str] = None,
        file_path: Optional[str] = None,
        **kwargs: Any,
    ):
        details = kwargs.pop("details", {})
        if export_format:
            details["export_format"] = export_format
        if file_path:
            details["file_path"] = file_path

        super().__init__(
            message=message,
            error_code="EXPORT_ERROR",
            details=details,
            **kwargs,
        )


# Exit codes of the command-line interface
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_NON_CONVERGENCE = 4


def exit_code_for(error: BaseException) -> int:
    """Map an exception onto the CLI exit-code contract."""
    if isinstance(error, (ValidationError, ConfigurationError)):
        return EXIT_USAGE
    if isinstance(error, (DataParseError, FileNotFoundError)):
        return EXIT_PARSE
    if isinstance(error, (ConvergenceError, IllConditionedError)):
        return EXIT_NON_CONVERGENCE
    return EXIT_FAILURE


# Exception context manager for error handling
class ErrorContext:
    """Context manager for standardized error handling."""

    def __init__(
        self,
        operation: str,
        reraise: bool = True,
        default_return: Any = None,
        logger: Any = None,
        error_class: Type[SqueezingError] = SqueezingError,
        **context: Any,
    ):
        """
        Initialize error context.

        Args:
            operation: Description of the operation being performed.
            reraise: Whether to reraise caught exceptions.
            default_return: Default return value if error occurs and reraise=False.
            logger: Logger instance for error logging.
            error_class: SqueezingError subclass raised for foreign exceptions.
            **context: Extra keyword arguments for ``error_class``.
        """
        self.operation = operation
        self.reraise = reraise
        self.default_return = default_return
        self.logger = logger
        self.error_class = error_class
        self.context = context
        self.error: Optional[BaseException] = None

    def __enter__(self) -> "ErrorContext":
        return self

    def __exit__(self, exc_type: Any, exc_val: Any, exc_tb: Any) -> bool:
        if exc_type is None:
            return False

        self.error = exc_val
        if self.logger:
            self.logger.error("Error in %s: %s", self.operation, exc_val)

        if not self.reraise:
            return True

        if isinstance(exc_val, (SqueezingError, FileNotFoundError)):
            return False

        raise self.error_class(
            message=f"Error in {self.operation}: {exc_val}",
            details={"operation": self.operation, "original_error": str(exc_val)},
            **self.context,
        ) from exc_val


def format_error_for_user(error: BaseException) -> Dict[str, Any]:
    """Format error for user-friendly display."""
    if isinstance(error, SqueezingError):
        return {
            "error": True,
            "message": error.message,
            "code": error.error_code,
            "recoverable": error.recoverable,
            "details": error.details,
        }
    return {
        "error": True,
        "message": str(error),
        "code": "UNKNOWN_ERROR",
        "recoverable": True,
    }
