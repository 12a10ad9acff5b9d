"""
Shared parameter and coefficient types.
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from core.errors import DimensionMismatchError


class PenaltySpec(BaseModel):
    """Penalty configuration (alpha, lambda_s, lambda_d, G) for one fit."""
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(0.75, ge=0.0, le=1.0)
    lambda_s: float = Field(..., ge=0.0)
    lambda_d: float = Field(0.0, ge=0.0)
    num_models: int = Field(1, ge=1)

    def with_penalties(self, lambda_s: Optional[float] = None,
                       lambda_d: Optional[float] = None) -> "PenaltySpec":
        update: Dict[str, Any] = {}
        if lambda_s is not None:
            update["lambda_s"] = float(lambda_s)
        if lambda_d is not None:
            update["lambda_d"] = float(lambda_d)
        # model_copy skips validation, so rebuild
        return PenaltySpec(**{**self.model_dump(), **update})

    @property
    def ridge_factor(self) -> float:
        """(1 - alpha) * lambda_s, the ridge part of the sparsity penalty."""
        return (1.0 - self.alpha) * self.lambda_s


@dataclass(frozen=True)
class CoefficientBundle:
    """p x G matrix whose columns are the coefficients of the G models."""
    beta: np.ndarray
    on_standardized_scale: bool = True

    def __post_init__(self):
        beta = np.array(self.beta, dtype=np.float64)
        if beta.ndim != 2:
            raise DimensionMismatchError(f"Coefficient bundle must be p x G, got shape {beta.shape}")
        if not np.all(np.isfinite(beta)):
            raise ValueError("Coefficient bundle contains non-finite entries")
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)

    @classmethod
    def zeros(cls, p: int, num_models: int) -> "CoefficientBundle":
        return cls(np.zeros((p, num_models)))

    @property
    def p(self) -> int:
        return self.beta.shape[0]

    @property
    def num_models(self) -> int:
        return self.beta.shape[1]

    def nonzero_counts(self) -> np.ndarray:
        """Number of active variables in each model."""
        return np.count_nonzero(self.beta, axis=0)

    def is_null(self) -> bool:
        return not np.any(self.beta)

    def is_disjoint(self) -> bool:
        """True when every variable is active in at most one model."""
        return bool(np.all(np.count_nonzero(self.beta, axis=1) <= 1))

    def is_separated(self) -> bool:
        """Disjoint, with no model left empty while another holds several variables."""
        counts = self.nonzero_counts()
        return self.is_disjoint() and bool(np.all(counts > 0) or np.all(counts <= 1))


    def to_dict(self) -> Dict[str, Any]:
        return {
            "beta": self.beta.tolist(),
            "on_standardized_scale": self.on_standardized_scale,
        }


class SolverSettings(BaseModel):
    """Coordinate-descent stopping rule and optional warm start."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    delta: float = Field(1e-8, gt=0.0)
    max_cycles: int = Field(10000, ge=1)
    initial_bundle: Optional[CoefficientBundle] = None

    @field_validator("initial_bundle")
    @classmethod
    def _standardized_start(cls, bundle: Optional[CoefficientBundle]) -> Optional[CoefficientBundle]:
        if bundle is not None and not bundle.on_standardized_scale:
            raise ValueError("Warm starts must be on the standardized scale")
        return bundle

    def warm(self, bundle: Optional[CoefficientBundle]) -> "SolverSettings":
        """Same stopping rule, starting from the given bundle."""
        return SolverSettings(delta=self.delta, max_cycles=self.max_cycles,
                              initial_bundle=bundle)
