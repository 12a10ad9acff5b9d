"""
Standardization of the design matrix and response.

Columns of X and the response are centered and scaled with the 1/n moment
convention, so that (1/n) sum_i x_ij^2 = 1 and (1/n) sum_i y_i^2 = 1. The
centering and scaling factors are kept so fitted coefficients can be mapped
back to raw units with an intercept.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from core.errors import DegenerateInputError, DimensionMismatchError
from core.models import CoefficientBundle

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StandardizedDesign:
    """Centered and scaled predictors and response with their scaling factors."""
    x: np.ndarray
    y: np.ndarray
    col_center: np.ndarray
    col_scale: np.ndarray
    y_center: float
    y_scale: float
    feature_names: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.x.ndim != 2:
            raise DimensionMismatchError(f"x must be two-dimensional, got shape {self.x.shape}")
        n, p = self.x.shape
        if self.y.shape != (n,):
            raise DimensionMismatchError(f"y has shape {self.y.shape}, expected ({n},)")
        if self.col_center.shape != (p,) or self.col_scale.shape != (p,):
            raise DimensionMismatchError("Centering/scaling vectors must have length p")
        if np.any(self.col_scale <= 0):
            raise DegenerateInputError(None, "Column scales must be strictly positive")
        if self.y_scale <= 0:
            raise DegenerateInputError(None, "Response scale must be strictly positive")
        if self.feature_names and len(self.feature_names) != p:
            raise DimensionMismatchError(
                f"{len(self.feature_names)} feature names given for {p} columns")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def names(self) -> List[str]:
        """Feature names, falling back to x1..xp."""
        if self.feature_names:
            return list(self.feature_names)
        return [f"x{j + 1}" for j in range(self.p)]

    @classmethod
    def from_standardized(cls, x: np.ndarray, y: np.ndarray,
                          feature_names: Sequence[str] = ()) -> "StandardizedDesign":
        """Wrap data that already satisfies the moment conditions, with identity factors."""
        x = np.asfortranarray(x, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.float64)
        p = x.shape[1] if x.ndim == 2 else 0
        return cls(
            x=x,
            y=y,
            col_center=np.zeros(p),
            col_scale=np.ones(p),
            y_center=0.0,
            y_scale=1.0,
            feature_names=tuple(feature_names),
        )

    def raw(self) -> Tuple[np.ndarray, np.ndarray]:
        """Map the standardized data back to raw units."""
        x_raw = self.x * self.col_scale + self.col_center
        y_raw = self.y * self.y_scale + self.y_center
        return x_raw, y_raw

    def subset(self, rows: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Standardized-scale rows, used as raw input for fold-wise re-standardization."""
        return self.x[rows], self.y[rows]


def standardize(x_raw: np.ndarray, y_raw: np.ndarray,
                feature_names: Optional[Sequence[str]] = None) -> StandardizedDesign:
    """
    Center and scale predictors and response.

    Args:
        x_raw: n x p predictor matrix
        y_raw: response vector of length n
        feature_names: optional column names used in error messages and artifacts

    Returns:
        StandardizedDesign with the stored centering and scaling factors

    Raises:
        DegenerateInputError: a column or the response is constant
    """
    x_raw = np.asarray(x_raw, dtype=np.float64)
    y_raw = np.asarray(y_raw, dtype=np.float64).ravel()

    if x_raw.ndim != 2:
        raise DimensionMismatchError(f"x must be two-dimensional, got shape {x_raw.shape}")
    n, p = x_raw.shape
    if y_raw.shape[0] != n:
        raise DimensionMismatchError(f"x has {n} rows but y has {y_raw.shape[0]} entries")
    if n < 2:
        raise DegenerateInputError(None, f"At least two observations are required, got {n}")

    names = tuple(feature_names) if feature_names is not None else ()
    if names and len(names) != p:
        raise DimensionMismatchError(f"{len(names)} feature names given for {p} columns")

    # exact constancy check; rounding in the mean must not hide a constant column
    spans = np.ptp(x_raw, axis=0)
    constant = np.flatnonzero(spans == 0)
    if constant.size:
        j = int(constant[0])
        raise DegenerateInputError(names[j] if names else f"x{j + 1}")
    if np.ptp(y_raw) == 0:
        raise DegenerateInputError(None)

    col_center = x_raw.mean(axis=0)
    centered = x_raw - col_center
    col_scale = np.sqrt(np.mean(centered ** 2, axis=0))

    y_center = float(y_raw.mean())
    y_centered = y_raw - y_center
    y_scale = float(np.sqrt(np.mean(y_centered ** 2)))

    logger.debug(f"Standardized design with n={n}, p={p}")

    return StandardizedDesign(
        x=np.asfortranarray(centered / col_scale),
        y=y_centered / y_scale,
        col_center=col_center,
        col_scale=col_scale,
        y_center=y_center,
        y_scale=y_scale,
        feature_names=names,
    )


def destandardize(bundle: Union[CoefficientBundle, np.ndarray],
                  design: StandardizedDesign) -> Tuple[np.ndarray, np.ndarray]:
    """
    Express standardized-scale coefficients in raw units.

    Args:
        bundle: p x G coefficients on the standardized scale
        design: the design the coefficients were fitted on

    Returns:
        (coefficients p x G in raw units, intercepts of length G)
    """
    if isinstance(bundle, CoefficientBundle):
        if not bundle.on_standardized_scale:
            raise ValueError("Bundle is already in raw units")
        beta = bundle.beta
    else:
        beta = np.asarray(bundle, dtype=np.float64)
    if beta.ndim == 1:
        beta = beta[:, None]
    if beta.shape[0] != design.p:
        raise DimensionMismatchError(
            f"Coefficients have {beta.shape[0]} rows, design has {design.p} columns")

    coef = design.y_scale * beta / design.col_scale[:, None]
    intercepts = design.y_center - design.col_center @ coef
    return coef, intercepts
