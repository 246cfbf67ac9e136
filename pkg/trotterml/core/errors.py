"""Exception hierarchy. Each class knows the CLI exit code of its error class."""

from __future__ import annotations


class TrotterMLError(Exception):
    """Base class for all trotterml errors."""

    exit_code = 1


class ConfigError(TrotterMLError):
    """Run configuration failed validation.

    ``problems`` holds one ``(field_path, message)`` entry per violated field.
    """

    exit_code = 2

    def __init__(self, message: str, problems: list[tuple[str, str]] | None = None):
        self.problems = problems or []
        if self.problems:
            details = "; ".join(f"{loc}: {msg}" for loc, msg in self.problems)
            message = f"{message} ({details})"
        super().__init__(message)


class InvalidArgumentError(TrotterMLError, ValueError):
    """A precondition on an operation argument was violated."""

    exit_code = 3


class CapabilityError(TrotterMLError):
    """The request exceeds what the dense simulator supports."""

    exit_code = 3


class DataError(TrotterMLError):
    """Problems with datasets, histograms or artifact files."""

    exit_code = 3


class QuantumStateError(DataError):
    """A density matrix is not a valid state (e.g. not normalized)."""


class MeasurementContractError(DataError):
    """Counts were read out on an axis they were not pre-rotated for."""


class DegeneratePostSelectionError(DataError):
    """Post-selection discarded every shot."""


class AlignmentError(DataError):
    """Two datasets (or curves) do not cover the same keys."""

    def __init__(self, message: str, missing: list | None = None):
        self.missing = list(missing or [])
        if self.missing:
            shown = ", ".join(str(k) for k in self.missing[:10])
            more = f" (+{len(self.missing) - 10} more)" if len(self.missing) > 10 else ""
            message = f"{message}: missing {shown}{more}"
        super().__init__(message)


class UndefinedObservableError(DataError):
    """The requested observable is undefined for this input."""


class DatasetParseError(DataError):
    """An artifact file could not be parsed."""

    def __init__(self, path: object, line: int | None, reason: str):
        self.path = path
        self.line = line
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {reason}")


class TrainingDivergedError(TrotterMLError):
    """Training produced a non-finite loss."""

    exit_code = 4

    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"training diverged at epoch {epoch} (loss is not finite)")


class LineageError(DataError):
    """Two artifacts were produced from different model/schedule settings."""
