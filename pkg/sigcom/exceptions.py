"""Custom exceptions for sigcom.

Every error carries the process exit code the CLI maps it to:
1 for configuration problems, 2 for data problems, 3 for numeric failures.
"""


class SigcomError(Exception):
    """Base exception for sigcom errors."""

    exit_code = 1


class ConfigurationError(SigcomError):
    """Raised when the run configuration is invalid or contradictory."""

    exit_code = 1


class ValidationError(ConfigurationError):
    """Raised when a library call receives an out-of-range argument."""

    pass


class ReportError(SigcomError):
    """Raised when result files cannot be written."""

    exit_code = 1


class DataError(SigcomError):
    """Raised when input data is malformed or unusable."""

    exit_code = 2


class ParseError(DataError):
    """Raised when a CSV file cannot be parsed."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column '{column}'")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
        self.row = row
        self.column = column


class EmptyPanelError(DataError):
    """Raised when filtering leaves no series in a panel."""

    pass


class InsufficientObservationsError(DataError):
    """Raised when T <= N where the random-matrix regime requires T > N."""

    pass


class NumericError(SigcomError):
    """Raised when a numerical computation fails or is undefined."""

    exit_code = 3
