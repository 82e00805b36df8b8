"""Exception hierarchy shared by the forecasting toolkit."""

from __future__ import annotations

from datetime import date
from pathlib import Path


class FlucastError(Exception):
    """Base class for every error raised by the toolkit."""


class ShapeError(FlucastError, ValueError):
    """Raised when array dimensions do not line up."""


class InvalidInputError(FlucastError, ValueError):
    """Raised when an input is empty or outside its valid range."""


class InvalidParameterError(FlucastError, ValueError):
    """Raised when a hyperparameter is outside its valid domain."""


class DegenerateBatchError(InvalidInputError):
    """Raised when batch statistics cannot be computed (single-row batch)."""


class InsufficientDataError(FlucastError, ValueError):
    """Raised when a series is too short for the requested transformation."""


class DataGapError(FlucastError, LookupError):
    """Raised when a required date is not covered by a series."""

    def __init__(self, message: str, missing: date | None = None) -> None:
        self.missing = missing
        super().__init__(message)


class ParseError(FlucastError, ValueError):
    """Error while reading a CSV file, with the offending location."""

    def __init__(self, message: str, path: Path | str, line: int | None = None) -> None:
        self.path = Path(path)
        self.line = line
        location = f"{self.path}:{line}" if line is not None else str(self.path)
        super().__init__(f"{location}: {message}")


class ConfigurationError(FlucastError, ValueError):
    """Raised when a spec or config is internally inconsistent."""


class MisuseError(FlucastError, TypeError):
    """Raised when a prediction routine is called on the wrong kind of model."""


class UndefinedCorrelationError(FlucastError, ValueError):
    """Raised when a Pearson correlation is requested for a constant series."""


class TrainingAbortedError(FlucastError, RuntimeError):
    """Raised when training produces a non-finite loss or gradient."""

    def __init__(self, message: str, epoch: int | None = None, batch: int | None = None) -> None:
        self.epoch = epoch
        self.batch = batch
        context = []
        if epoch is not None:
            context.append(f"epoch={epoch}")
        if batch is not None:
            context.append(f"batch={batch}")
        suffix = f" ({', '.join(context)})" if context else ""
        super().__init__(f"{message}{suffix}")


class IntegrityError(FlucastError, RuntimeError):
    """Raised when stored artifacts are missing or an audit fails."""


class CheckpointError(FlucastError, ValueError):
    """Raised when a checkpoint cannot be read or has the wrong version."""


class ConstantSeriesError(InvalidInputError):
    """Raised when min-max statistics are requested for a constant series."""


class NotPositiveDefiniteError(FlucastError, ArithmeticError):
    """Raised when a kernel matrix stays indefinite after jitter escalation."""
