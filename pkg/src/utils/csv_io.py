"""
CSV ingestion for the command-line tools.

Files are comma-separated UTF-8 with a header row and '.' as decimal mark.
Every cell must be numeric; errors report the data row (1-based, header not
counted) and the column name.
"""

import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from core.errors import ColumnMismatchError, DataFormatError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def read_numeric_csv(path: PathLike) -> pd.DataFrame:
    """
    Read a CSV file whose cells are all numeric.

    Raises:
        DataFormatError: unreadable file, missing header, ragged rows, empty or non-numeric cells
    """
    try:
        frame = pd.read_csv(path, sep=",", header=0, dtype=str, keep_default_na=False,
                            encoding="utf-8")
    except FileNotFoundError as e:
        raise DataFormatError(f"File {path} not found") from e
    except pd.errors.EmptyDataError as e:
        raise DataFormatError(f"File {path} is empty") from e
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataFormatError(f"Cannot parse {path}: {e}") from e

    if frame.empty:
        raise DataFormatError(f"File {path} has a header but no data rows")
    duplicated = frame.columns[frame.columns.duplicated()].tolist()
    if duplicated:
        raise DataFormatError(f"Duplicate column names: {', '.join(map(str, duplicated))}")

    numeric = {}
    for column in frame.columns:
        raw = frame[column].str.strip()
        values = pd.to_numeric(raw, errors="coerce")
        bad = values.isna() | ~np.isfinite(values.fillna(0.0))
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            cell = raw.iloc[row]
            problem = "empty cell" if pd.isna(cell) or cell == "" else f"non-numeric value '{cell}'"
            raise DataFormatError(problem, row=row + 1, column=str(column))
        numeric[column] = values.astype(float)

    logger.debug(f"Read {len(frame)} rows and {len(frame.columns)} columns from {path}")
    return pd.DataFrame(numeric, columns=frame.columns)


def load_training_data(path: PathLike, response: str = "y") -> Tuple[np.ndarray, np.ndarray, List[str]]:
    """
    Split a CSV into predictors and the named response column.

    Returns:
        (x n x p, y of length n, feature names in file order)
    """
    frame = read_numeric_csv(path)
    if response not in frame.columns:
        raise DataFormatError(f"Response column '{response}' not found", column=response)
    features = [str(column) for column in frame.columns if column != response]
    if not features:
        raise DataFormatError("No predictor columns besides the response")
    return frame[features].to_numpy(dtype=float), frame[response].to_numpy(dtype=float), features


def load_prediction_data(path: PathLike, feature_names: Sequence[str],
                         response: Optional[str] = None) -> np.ndarray:
    """
    Read predictors matched by name to the features a model was fitted on.

    Column order in the file does not matter. A response column, if present, is ignored.

    Raises:
        ColumnMismatchError: missing or unexpected columns
    """
    frame = read_numeric_csv(path)
    columns = {str(column) for column in frame.columns}
    if response is not None:
        columns.discard(response)
    expected = set(feature_names)
    if columns != expected:
        raise ColumnMismatchError(missing=expected - columns, extra=columns - expected)
    return frame[list(feature_names)].to_numpy(dtype=float)


def predictions_to_csv(predictions: np.ndarray) -> str:
    """One prediction per row under a 'prediction' header."""
    frame = pd.DataFrame({"prediction": np.asarray(predictions, dtype=float)})
    return frame.to_csv(index=False, lineterminator="\n", float_format="%.17g")
