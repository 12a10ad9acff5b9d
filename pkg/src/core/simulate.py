"""
Synthetic benchmark scenarios and the Monte-Carlo experiment runner.

Each replication draws beta0, a training copy and an independent test copy of
the data. Every method is tuned by cross-validation on the training copy only
and scored on the test copy by MSPE divided by the noise variance, so the best
achievable value is 1.
"""

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import linalg, stats

from core.ensemble import (AveragedModel, average_coefficients, metric_or_none, overlap,
                           precision_recall, predict)
from core.errors import CovarianceError, SplitRegError
from core.models import SolverSettings
from core.standardize import destandardize, standardize
from core.tuning import CvPlan, TuningResult, parallel_map, select_num_models, tune

logger = logging.getLogger(__name__)

SIGN_FLIP_PROBABILITY = 0.2
EIGEN_TOLERANCE = 1e-12

METRIC_COLUMNS = ["mspe_over_sigma2", "precision", "recall", "ovp", "wall_time"]
SCENARIO_COLUMNS = ["scenario_id", "p", "n", "rho", "snr", "zeta"]


class ScenarioSpec(BaseModel):
    """One simulation setting: covariance scenario, dimensions, correlation, sparsity and SNR."""
    model_config = ConfigDict(frozen=True)

    scenario_id: Literal[1, 2, 3]
    p: int = Field(..., ge=1)
    n: int = Field(..., ge=2)
    rho: float = Field(..., ge=0.0, lt=1.0)
    zeta: float = Field(..., gt=0.0, lt=1.0)
    snr: float = Field(..., gt=0.0)
    seed: int = 0

    @model_validator(mode="after")
    def _has_active_variables(self) -> "ScenarioSpec":
        if self.p0 < 1:
            raise ValueError(f"floor(p * zeta) = {self.p0}; at least one active variable is required")
        return self

    @property
    def p0(self) -> int:
        """Number of active variables, floor(p * zeta)."""
        return int(math.floor(self.p * self.zeta + 1e-9))

    @property
    def block_boundary(self) -> int:
        """Size of the first correlated block in Scenario 2."""
        return self.p0 // 2 + math.ceil((self.p - self.p0) / 2)

    def parameters(self) -> Dict[str, Any]:
        return {key: getattr(self, key) for key in SCENARIO_COLUMNS}


class MethodConfig(BaseModel):
    """
    A fitting method: elastic-net mixing and number of models.

    num_models may be a list of candidates, in which case G is chosen by CV too.
    Lasso and Elastic Net are the single-model cases.
    """
    model_config = ConfigDict(frozen=True)

    label: str
    alpha: float = Field(0.75, ge=0.0, le=1.0)
    num_models: Union[int, List[int]] = 1
    num_folds: int = Field(10, ge=2)
    warm_start: bool = True

    @field_validator("num_models")
    @classmethod
    def _positive_counts(cls, value):
        counts = value if isinstance(value, list) else [value]
        if not counts or any(g < 1 for g in counts):
            raise ValueError("Numbers of models must be positive integers")
        return value

    @classmethod
    def lasso(cls) -> "MethodConfig":
        return cls(label="Lasso", alpha=1.0, num_models=1)

    @classmethod
    def elastic_net(cls) -> "MethodConfig":
        return cls(label="Elastic Net", alpha=0.75, num_models=1)

    @classmethod
    def splitreg_lasso(cls, num_models: Union[int, List[int]] = 10) -> "MethodConfig":
        return cls(label="SplitReg-Lasso", alpha=1.0, num_models=num_models)

    @classmethod
    def splitreg_en(cls, num_models: Union[int, List[int]] = 10) -> "MethodConfig":
        return cls(label="SplitReg-EN", alpha=0.75, num_models=num_models)


@dataclass(frozen=True)
class GenerativeModel:
    """Linear model y = x'beta0 + sigma*eps with x ~ N(0, F F')."""
    factor: np.ndarray
    beta0: np.ndarray
    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"Noise standard deviation must be non-negative, got {self.sigma}")

    @property
    def covariance(self) -> np.ndarray:
        return self.factor @ self.factor.T

    @classmethod
    def from_covariance(cls, covariance: np.ndarray, beta0: np.ndarray,
                        sigma: float) -> "GenerativeModel":
        return cls(factor_covariance(covariance), np.asarray(beta0, dtype=float), sigma)


@dataclass
class ExperimentRecord:
    """Outcome of one method on one replication."""
    scenario_id: int
    p: int
    n: int
    rho: float
    snr: float
    zeta: float
    replication: int
    method: str
    num_models: Optional[int] = None
    lambda_s: Optional[float] = None
    lambda_d: Optional[float] = None
    mspe_over_sigma2: Optional[float] = None
    precision: Optional[float] = None
    recall: Optional[float] = None
    ovp: Optional[float] = None
    wall_time: Optional[float] = None
    error: Optional[str] = None


@dataclass
class ExperimentResult:
    """Per-replication records with per-method summaries."""
    records: List[ExperimentRecord] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        columns = list(ExperimentRecord.__dataclass_fields__)
        frame = pd.DataFrame([asdict(record) for record in self.records], columns=columns)
        for column in METRIC_COLUMNS + ["num_models", "lambda_s", "lambda_d"]:
            frame[column] = pd.to_numeric(frame[column])
        return frame

    def summary(self) -> pd.DataFrame:
        """Mean and standard error (sd / sqrt(replications)) of each metric per setting and method."""
        frame = self.to_frame()
        frame = frame[frame["error"].isna()]
        keys = SCENARIO_COLUMNS + ["method"]
        if frame.empty:
            return pd.DataFrame(columns=keys + ["replications"])

        grouped = frame.groupby(keys, sort=False)
        summary = grouped.size().rename("replications").to_frame()
        for column in METRIC_COLUMNS:
            values = grouped[column]
            summary[f"{column}_mean"] = values.mean()
            summary[f"{column}_se"] = values.std(ddof=1) / np.sqrt(values.count())
        summary["num_models_mean"] = grouped["num_models"].mean()
        return summary.reset_index()

    def extend(self, other: "ExperimentResult") -> None:
        self.records.extend(other.records)


@dataclass(frozen=True)
class TimingFit:
    """Least-squares line of mean wall time against G."""
    slope: float
    intercept: float
    r_squared: float


@dataclass
class MethodFit:
    """A method tuned on one training set, with its raw-unit averaged model."""
    tuning: TuningResult
    model: AveragedModel

    def predict(self, x: np.ndarray) -> np.ndarray:
        return predict(self.model, x)


def _correlated_blocks(spec: ScenarioSpec) -> List[Tuple[int, int]]:
    """Index ranges [start, stop) whose variables are equicorrelated with rho."""
    if spec.scenario_id == 1:
        return [(0, spec.p)]
    if spec.scenario_id == 2:
        return [(0, spec.block_boundary), (spec.block_boundary, spec.p)]
    return [(0, spec.p0)]


def scenario_covariance(spec: ScenarioSpec) -> np.ndarray:
    """The correlation matrix Sigma of a scenario, entry by entry."""
    sigma = np.eye(spec.p)
    for start, stop in _correlated_blocks(spec):
        block = sigma[start:stop, start:stop]
        block[:] = spec.rho
        np.fill_diagonal(block, 1.0)
    return sigma


def _equicorrelation_root(size: int, rho: float) -> np.ndarray:
    """Symmetric square root of (1-rho) I + rho 11'."""
    if size == 0:
        return np.zeros((0, 0))
    base = math.sqrt(1.0 - rho)
    shift = (math.sqrt(1.0 - rho + rho * size) - base) / size
    return base * np.eye(size) + shift * np.ones((size, size))


def build_covariance(spec: ScenarioSpec) -> np.ndarray:
    """
    Factor F with F F' = Sigma for the scenario.

    Scenario 1: one equicorrelated block. Scenario 2: two equicorrelated blocks
    split at floor(p0/2) + ceil((p-p0)/2). Scenario 3: equicorrelated leading p0
    block, identity elsewhere.
    """
    pieces = []
    position = 0
    for start, stop in _correlated_blocks(spec):
        if start > position:
            pieces.append(np.eye(start - position))
        if stop > start:
            pieces.append(_equicorrelation_root(stop - start, spec.rho))
        position = stop
    if position < spec.p:
        pieces.append(np.eye(spec.p - position))
    return linalg.block_diag(*pieces)


def factor_covariance(covariance: np.ndarray) -> np.ndarray:
    """
    General factor of a covariance matrix by symmetric eigendecomposition.

    Eigenvalues within EIGEN_TOLERANCE below zero are clamped to zero.

    Raises:
        CovarianceError: the matrix is not positive semi-definite
    """
    eigenvalues, eigenvectors = linalg.eigh(covariance)
    if eigenvalues.min() < -EIGEN_TOLERANCE:
        raise CovarianceError(f"Covariance has eigenvalue {eigenvalues.min():.3g} < 0")
    return eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))


def active_positions(spec: ScenarioSpec) -> np.ndarray:
    """Zero-based indices of the p0 nonzero entries of beta0."""
    if spec.scenario_id == 2:
        head = spec.p0 // 2
        start = spec.block_boundary
        return np.concatenate([np.arange(head), np.arange(start, start + spec.p0 - head)])
    return np.arange(spec.p0)


def generate_beta0(spec: ScenarioSpec, rng: np.random.Generator) -> np.ndarray:
    """Nonzero entries (-1)^u (a + |z|), a = 5 ln(n) / sqrt(n), u ~ Bernoulli(0.2), z ~ N(0, 1)."""
    a = 5.0 * math.log(spec.n) / math.sqrt(spec.n)
    u = rng.binomial(1, SIGN_FLIP_PROBABILITY, size=spec.p0)
    z = rng.standard_normal(spec.p0)
    beta0 = np.zeros(spec.p)
    beta0[active_positions(spec)] = np.where(u == 1, -1.0, 1.0) * (a + np.abs(z))
    return beta0


def sigma_from_snr(beta0: np.ndarray, covariance: np.ndarray, snr: float) -> float:
    """sigma = sqrt(beta0' Sigma beta0 / SNR)."""
    signal = float(beta0 @ covariance @ beta0)
    if signal <= 0:
        raise ValueError("Signal variance beta0' Sigma beta0 must be positive")
    if snr <= 0:
        raise ValueError(f"SNR must be positive, got {snr}")
    return math.sqrt(signal / snr)


def sample_dataset(model: GenerativeModel, n: int,
                   rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Draw n rows x_i = F g_i and responses y_i = x_i'beta0 + sigma eps_i."""
    x = rng.standard_normal((n, model.factor.shape[1])) @ model.factor.T
    y = x @ model.beta0 + model.sigma * rng.standard_normal(n)
    return x, y


def mspe(predictions: np.ndarray, y_test: np.ndarray, sigma: float) -> float:
    """Mean squared prediction error divided by sigma^2."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    residual = np.asarray(y_test, dtype=float) - np.asarray(predictions, dtype=float)
    return float(np.mean(residual ** 2)) / sigma ** 2


def fit_method(method: MethodConfig, x_train: np.ndarray, y_train: np.ndarray, seed: int,
               settings: Optional[SolverSettings] = None, threads: int = 1) -> MethodFit:
    """Tune a method by CV on the training data and express its averaged model in raw units."""
    design = standardize(x_train, y_train)
    plan = CvPlan.create(design.n, method.num_folds, seed)
    if isinstance(method.num_models, list):
        tuning = select_num_models(design, method.num_models, method.alpha, plan, settings,
                                   threads, warm_start=method.warm_start)
    else:
        tuning = tune(design, method.alpha, method.num_models, plan, settings, threads,
                      warm_start=method.warm_start)
    coef, intercepts = destandardize(tuning.bundle, design)
    return MethodFit(tuning=tuning, model=average_coefficients(coef, intercepts))


def _replication(spec: ScenarioSpec, methods: Sequence[MethodConfig], replication: int,
                 settings: Optional[SolverSettings], threads: int) -> List[ExperimentRecord]:
    rng = np.random.default_rng([spec.seed, replication])
    factor = build_covariance(spec)
    beta0 = generate_beta0(spec, rng)
    model = GenerativeModel(factor, beta0, sigma_from_snr(beta0, factor @ factor.T, spec.snr))
    x_train, y_train = sample_dataset(model, spec.n, rng)
    x_test, y_test = sample_dataset(model, spec.n, rng)
    cv_seed = int(rng.integers(2 ** 31))

    records = []
    for method in methods:
        record = ExperimentRecord(**spec.parameters(), replication=replication, method=method.label)
        start = time.perf_counter()
        try:
            result = fit_method(method, x_train, y_train, cv_seed, settings, threads)
        except SplitRegError as e:
            logger.warning(f"Replication {replication}, {method.label}: {e}")
            record.error = str(e)
            records.append(record)
            continue
        record.wall_time = time.perf_counter() - start

        precision, recall = precision_recall(result.model.beta_star, beta0)
        record.num_models = result.tuning.num_models
        record.lambda_s = result.tuning.lambda_s_opt
        record.lambda_d = result.tuning.lambda_d_opt
        record.mspe_over_sigma2 = mspe(result.predict(x_test), y_test, model.sigma)
        record.precision = metric_or_none(precision)
        record.recall = metric_or_none(recall)
        record.ovp = overlap(result.tuning.bundle)
        records.append(record)
    logger.info(f"Scenario {spec.scenario_id} (rho={spec.rho}, snr={spec.snr}, zeta={spec.zeta}): "
                f"replication {replication} done")
    return records


def run_experiment(spec: ScenarioSpec, methods: Sequence[MethodConfig], replications: int,
                   settings: Optional[SolverSettings] = None, threads: int = 1) -> ExperimentResult:
    """
    Run every method on independent replications of a scenario.

    Replication r draws from the stream seeded by (spec.seed, r), so the result
    does not depend on the number of threads. A method that fails on a
    replication is recorded with its error and skipped for that replication only.

    Args:
        spec: simulation setting
        methods: methods to compare
        replications: number of Monte-Carlo replications
        settings: coordinate-descent stopping rule
        threads: replications run in parallel on this many threads
    """
    if replications < 1:
        raise ValueError(f"replications must be at least 1, got {replications}")
    if not methods:
        raise ValueError("At least one method is required")

    # a single replication gets the threads for its folds instead
    inner = threads if replications == 1 else 1
    batches = parallel_map(
        lambda r: _replication(spec, methods, r, settings, inner),
        list(range(replications)), threads)
    return ExperimentResult(records=[record for batch in batches for record in batch])


def run_grid(specs: Sequence[ScenarioSpec], methods: Sequence[MethodConfig], replications: int,
             settings: Optional[SolverSettings] = None, threads: int = 1) -> ExperimentResult:
    """Run the experiment for every setting in turn and pool the records."""
    result = ExperimentResult()
    for spec in specs:
        logger.info(f"Running scenario {spec.scenario_id}: p={spec.p}, n={spec.n}, rho={spec.rho}, "
                    f"snr={spec.snr}, zeta={spec.zeta}")
        result.extend(run_experiment(spec, methods, replications, settings, threads))
    return result


def timing_linearity(result: ExperimentResult) -> TimingFit:
    """
    Fit mean wall time against the number of models.

    Raises:
        ValueError: fewer than two distinct numbers of models among the records
    """
    frame = result.to_frame()
    frame = frame[frame["error"].isna()]
    means = frame.groupby("num_models")["wall_time"].mean()
    if len(means) < 2:
        raise ValueError("Timing fit needs at least two distinct numbers of models")
    line = stats.linregress(means.index.to_numpy(dtype=float), means.to_numpy(dtype=float))
    return TimingFit(slope=float(line.slope), intercept=float(line.intercept),
                     r_squared=float(line.rvalue ** 2))
