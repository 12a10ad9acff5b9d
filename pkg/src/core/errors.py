"""
Exceptions raised by SplitReg.

Every error the library raises on bad input derives from SplitRegError so the
CLI can turn it into a clean non-zero exit.
"""

from typing import Iterable, Optional


class SplitRegError(Exception):
    """Base class for all SplitReg errors."""
    pass


class DegenerateInputError(SplitRegError):
    """A predictor column or the response has zero variance."""

    def __init__(self, column: Optional[str], message: Optional[str] = None):
        self.column = column
        if message is None:
            if column is None:
                message = "Response is constant; cannot standardize"
            else:
                message = f"Column '{column}' is constant; cannot standardize"
        super().__init__(message)


class DimensionMismatchError(SplitRegError):
    """Array shapes do not agree."""
    pass


class FoldDegenerateError(SplitRegError):
    """A cross-validation training fold cannot be standardized."""

    def __init__(self, fold: int, column: Optional[str]):
        self.fold = fold
        self.column = column
        what = "the response" if column is None else f"column '{column}'"
        super().__init__(f"Fold {fold}: {what} is constant on the training observations")


class UnsupportedPenaltyError(SplitRegError):
    """The requested penalty configuration is outside what an operation supports."""
    pass


class UniquenessError(SplitRegError):
    """A closed-form solution is requested where it is not guaranteed to be unique."""
    pass


class UndefinedThresholdError(SplitRegError):
    """A closed-form threshold divides by a zero coefficient."""
    pass


class NullModelError(SplitRegError):
    """Every model is empty where a non-null fit is required."""
    pass


class CovarianceError(SplitRegError):
    """A covariance matrix is not positive semi-definite."""
    pass


class TuningError(SplitRegError):
    """Cross-validated tuning failed."""
    pass


class DataFormatError(SplitRegError):
    """A CSV file cannot be read as a numeric table."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        self.row = row
        self.column = column
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column '{column}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(prefix + message)


class ColumnMismatchError(SplitRegError):
    """CSV columns do not match the features a model was fitted on."""

    def __init__(self, missing: Iterable[str], extra: Iterable[str]):
        self.missing = sorted(missing)
        self.extra = sorted(extra)
        parts = []
        if self.missing:
            parts.append(f"missing columns: {', '.join(self.missing)}")
        if self.extra:
            parts.append(f"unexpected columns: {', '.join(self.extra)}")
        super().__init__("Column mismatch; " + "; ".join(parts))


class ConfigError(SplitRegError):
    """An experiment configuration is invalid."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"Invalid config key '{key}': {message}")


class ArtifactError(SplitRegError):
    """A persisted artifact cannot be read or written."""
    pass
