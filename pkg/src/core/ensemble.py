"""
Pooling of the G fitted models and ensemble diagnostics.

All models get equal weight: the ensemble prediction is the prediction of the
averaged coefficient vector. Support-based metrics compare coefficients to
exact zero, which soft-thresholding produces.
"""

import enum
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from core.errors import DimensionMismatchError
from core.models import CoefficientBundle


class Metric(enum.Enum):
    """Tag for metrics that are undefined on an empty support."""
    UNDEFINED = "undefined"

    def __repr__(self) -> str:
        return "Metric.UNDEFINED"


MetricValue = Union[float, Metric]


def metric_or_none(value: MetricValue) -> Optional[float]:
    """Serializable form of a metric: None when undefined."""
    return None if value is Metric.UNDEFINED else float(value)


@dataclass(frozen=True)
class AveragedModel:
    """Averaged coefficient vector beta* with an intercept for raw-unit predictions."""
    beta_star: np.ndarray
    intercept: float = 0.0

    @property
    def p(self) -> int:
        return self.beta_star.shape[0]


def average_coefficients(bundle: Union[CoefficientBundle, np.ndarray],
                         intercepts: Optional[np.ndarray] = None) -> AveragedModel:
    """
    Average the models: beta*_j = (1/G) sum_g beta_j^g.

    Args:
        bundle: p x G coefficients
        intercepts: per-model intercepts in raw units, averaged alongside
    """
    beta = bundle.beta if isinstance(bundle, CoefficientBundle) else np.asarray(bundle, dtype=float)
    intercept = 0.0 if intercepts is None else float(np.mean(intercepts))
    return AveragedModel(beta_star=beta.mean(axis=1), intercept=intercept)


def predict(model: AveragedModel, x: np.ndarray) -> Union[float, np.ndarray]:
    """
    Ensemble prediction x'beta* + intercept.

    Accepts a single observation (length p) or a matrix of observations (n x p).
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.p:
        raise DimensionMismatchError(f"Expected {model.p} features, got {x.shape[-1]}")
    prediction = x @ model.beta_star + model.intercept
    if np.ndim(prediction) == 0:
        return float(prediction)
    return prediction


def predict_models(bundle: CoefficientBundle, x: np.ndarray) -> np.ndarray:
    """Per-model predictions, one column per model."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != bundle.p:
        raise DimensionMismatchError(f"Expected {bundle.p} features, got {x.shape[1]}")
    return x @ bundle.beta


def overlap(bundle: CoefficientBundle) -> float:
    """
    Overlap between models (OVP).

    With o_j the fraction of models using variable j, OVP is the mean of o_j over
    variables used by at least one model, and 0 when every model is empty.
    1/G means disjoint models; 1 means every used variable is in all models.
    """
    shares = np.count_nonzero(bundle.beta, axis=1) / bundle.num_models
    used = shares != 0
    if not np.any(used):
        return 0.0
    return float(shares[used].sum() / used.sum())


def precision_recall(beta_hat: np.ndarray, beta_true: np.ndarray) -> Tuple[MetricValue, MetricValue]:
    """
    Support precision and recall of an estimate against the true coefficients.

    Returns Metric.UNDEFINED for precision when the estimate is empty and for
    recall when the true support is empty.
    """
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta_true = np.asarray(beta_true, dtype=float)
    if beta_hat.shape != beta_true.shape:
        raise DimensionMismatchError(
            f"Estimate has shape {beta_hat.shape}, truth has shape {beta_true.shape}")

    selected = beta_hat != 0
    relevant = beta_true != 0
    hits = int(np.sum(selected & relevant))

    precision: MetricValue = Metric.UNDEFINED
    recall: MetricValue = Metric.UNDEFINED
    if selected.any():
        precision = hits / int(selected.sum())
    if relevant.any():
        recall = hits / int(relevant.sum())
    return precision, recall
