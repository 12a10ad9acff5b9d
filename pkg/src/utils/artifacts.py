"""
Persisted artifact schemas.

A fit artifact holds everything needed to predict in raw units: the per-model
coefficients and intercepts, the averaged model, and the standardization
factors used during fitting. A CV artifact wraps the final fit with the
search trace.
"""

from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from core.ensemble import AveragedModel, average_coefficients, overlap
from core.errors import ArtifactError
from core.models import PenaltySpec
from core.solver import FitResult
from core.standardize import StandardizedDesign, destandardize
from core.tuning import TuningResult

SCHEMA_VERSION = 1


class Standardization(BaseModel):
    col_center: List[float]
    col_scale: List[float]
    y_center: float
    y_scale: float


class FitDiagnostics(BaseModel):
    objective: float
    ovp: float
    converged: bool
    cycles: int
    last_change: float
    nonzero_counts: List[int]


class Provenance(BaseModel):
    input_file: str
    input_digest: str
    seed: Optional[int] = None
    version: str


class FitArtifact(BaseModel):
    """A fitted SplitReg ensemble in raw units."""
    schema_version: int = SCHEMA_VERSION
    kind: Literal["fit"] = "fit"
    penalty: PenaltySpec
    response: str
    feature_names: List[str]
    coefficients: List[List[float]] = Field(description="p x G, raw units")
    intercepts: List[float]
    beta_star: List[float]
    intercept: float
    standardized_coefficients: List[List[float]]
    standardization: Standardization
    fitted_values: List[float]
    diagnostics: FitDiagnostics
    provenance: Provenance

    def averaged_model(self) -> AveragedModel:
        return AveragedModel(beta_star=np.asarray(self.beta_star, dtype=float),
                             intercept=self.intercept)

    @classmethod
    def build(cls, design: StandardizedDesign, spec: PenaltySpec, result: FitResult,
              response: str, provenance: Provenance, x_raw: np.ndarray) -> "FitArtifact":
        """Artifact of a fit; fitted_values are the averaged-model predictions for x_raw."""
        bundle = result.bundle
        coef, intercepts = destandardize(bundle, design)
        averaged = average_coefficients(coef, intercepts)
        return cls(
            penalty=spec,
            response=response,
            feature_names=design.names,
            coefficients=coef.tolist(),
            intercepts=intercepts.tolist(),
            beta_star=averaged.beta_star.tolist(),
            intercept=averaged.intercept,
            standardized_coefficients=bundle.beta.tolist(),
            standardization=Standardization(
                col_center=design.col_center.tolist(),
                col_scale=design.col_scale.tolist(),
                y_center=design.y_center,
                y_scale=design.y_scale,
            ),
            fitted_values=(x_raw @ averaged.beta_star + averaged.intercept).tolist(),
            diagnostics=FitDiagnostics(
                objective=result.objective,
                ovp=overlap(bundle),
                converged=result.converged,
                cycles=result.cycles,
                last_change=result.last_change,
                nonzero_counts=bundle.nonzero_counts().tolist(),
            ),
            provenance=provenance,
        )


class TraceEntry(BaseModel):
    num_models: int
    lambda_s: float
    lambda_d: float
    cv_mspe: float
    converged: bool
    outer_iteration: int
    sweep: Literal["lambda_s", "lambda_d"]


class ModelCountEntry(BaseModel):
    num_models: int
    cv_mspe: Optional[float] = None


class TuningArtifact(BaseModel):
    """Outcome of cross-validated tuning, with the final fit at the selected penalties."""
    schema_version: int = SCHEMA_VERSION
    kind: Literal["cv"] = "cv"
    alpha: float
    lambda_s_opt: float
    lambda_d_opt: float
    num_models: int
    cv_mspe: float
    num_folds: int
    seed: int
    outer_iterations: int
    non_converged: int
    trace: List[TraceEntry]
    model_count_trace: List[ModelCountEntry]
    fit: FitArtifact

    @classmethod
    def build(cls, result: TuningResult, num_folds: int, seed: int,
              fit: FitArtifact) -> "TuningArtifact":
        return cls(
            alpha=result.alpha,
            lambda_s_opt=result.lambda_s_opt,
            lambda_d_opt=result.lambda_d_opt,
            num_models=result.num_models,
            cv_mspe=result.cv_mspe,
            num_folds=num_folds,
            seed=seed,
            outer_iterations=result.outer_iterations,
            non_converged=result.non_converged,
            trace=[TraceEntry(**point.to_dict()) for point in result.trace],
            model_count_trace=[ModelCountEntry(num_models=g, cv_mspe=score)
                               for g, score in result.model_count_trace],
            fit=fit,
        )


def parse_fit_artifact(payload: Dict[str, Any]) -> FitArtifact:
    """
    Read a fit artifact, unwrapping the final fit of a CV artifact.

    Raises:
        ArtifactError: unknown kind, unsupported schema version or invalid content
    """
    version = payload.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ArtifactError(f"Unsupported schema_version {version!r}; expected {SCHEMA_VERSION}")
    kind = payload.get("kind")
    try:
        if kind == "fit":
            return FitArtifact.model_validate(payload)
        if kind == "cv":
            return TuningArtifact.model_validate(payload).fit
    except ValidationError as e:
        raise ArtifactError(f"Invalid artifact: {e}") from e
    raise ArtifactError(f"Unknown artifact kind {kind!r}")
