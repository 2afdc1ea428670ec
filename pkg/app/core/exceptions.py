"""
Error hierarchy and process exit codes for SPCA-SI Monitor.
"""

from typing import Any, Optional

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_DATA = 4
EXIT_NUMERICAL = 5
EXIT_IO = 6


class SPCAError(Exception):
    """Base class for all toolkit errors."""

    exit_code: int = EXIT_DATA


class InvalidArgumentError(SPCAError, ValueError):
    """An argument is outside its documented domain."""

    exit_code = EXIT_VALIDATION


class DimensionMismatchError(InvalidArgumentError):
    """Array shapes disagree."""


class DataError(SPCAError):
    """Input data cannot be used."""

    exit_code = EXIT_DATA


class DegenerateDataError(DataError, ValueError):
    """A column has zero (or non-finite) sample variance."""

    def __init__(self, message: str, column: Optional[str] = None):
        super().__init__(message)
        self.column = column


class InsufficientDataError(DataError, ValueError):
    """Too few samples for the requested operation."""


class CSVParseError(DataError):
    """A CSV file is malformed."""

    def __init__(self, message: str, path: str, line: Optional[int] = None):
        location = f"{path}:{line}" if line is not None else path
        super().__init__(f"{location}: {message}")
        self.path = path
        self.line = line


class NumericalError(SPCAError):
    """A numerical procedure failed."""

    exit_code = EXIT_NUMERICAL


class DivergenceError(NumericalError):
    """The APG iteration produced a non-finite objective."""

    def __init__(self, message: str, trace: Any = None, column: Optional[int] = None):
        super().__init__(message)
        self.trace = trace
        self.column = column

    def with_column(self, column: int) -> "DivergenceError":
        return DivergenceError(f"column {column}: {self}", trace=self.trace, column=column)


class SingularMatrixError(NumericalError):
    """The covariance summary could not be inverted."""


class ArchiveError(SPCAError):
    """Base class for model archive problems."""

    exit_code = EXIT_DATA


class ArchiveFormatError(ArchiveError):
    """The archive file is malformed or truncated."""


class ArchiveVersionError(ArchiveError):
    """The archive format version is not supported."""

    exit_code = EXIT_VALIDATION


class ArchiveInvariantError(ArchiveError):
    """The archive content violates a chain invariant."""

    exit_code = EXIT_VALIDATION


class ArchiveExistsError(ArchiveError):
    """The target path exists and overwrite was not requested."""

    exit_code = EXIT_IO


class ScenarioStageError(SPCAError):
    """A stage of the scenario pipeline failed."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", EXIT_DATA)
