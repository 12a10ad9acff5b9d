"""
Penalty grids, K-fold cross-validation and the alternating lambda_s / lambda_d search.

The search starts at lambda_d = 0, so the pure elastic-net path is always
among the candidates. Each sweep runs from the largest grid value down to the
smallest, warm-starting every fit from the previous solution. Every fold runs
its own path; the full data is run as one extra path so that the selected
bundle comes from the same warm-started sequence as its CV score.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, List, Literal, Optional, Sequence, Tuple, TypeVar

import numpy as np

from core.ensemble import average_coefficients, predict
from core.errors import (DegenerateInputError, FoldDegenerateError, NullModelError, SplitRegError,
                         TuningError, UnsupportedPenaltyError)
from core.models import CoefficientBundle, PenaltySpec, SolverSettings
from core.solver import FitResult, fit
from core.standardize import StandardizedDesign, destandardize, standardize

logger = logging.getLogger(__name__)

GRID_POINTS = 100
REFINE_POINTS = 20
MAX_BRACKET_STEPS = 60
DEFAULT_MODEL_COUNTS = (2, 5, 7, 10)
# keeps the grid head strictly above the null threshold despite summation order
NULL_MARGIN = 1e-9

Axis = Literal["lambda_s", "lambda_d"]
T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True)
class PenaltyGrid:
    """Descending penalty values, log-equispaced between epsilon*max and max."""
    values: np.ndarray
    max_value: float
    epsilon: float
    includes_zero: bool = False

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class CvPlan:
    """Fold assignment of the n observations."""
    num_folds: int
    fold_assignment: np.ndarray
    seed: int

    @classmethod
    def create(cls, n: int, num_folds: int = 10, seed: int = 0) -> "CvPlan":
        """
        Balanced random assignment: fold sizes differ by at most one.

        Raises:
            TuningError: fewer than two folds, or training folds under two observations
        """
        if num_folds < 2:
            raise TuningError(f"Cross-validation needs at least 2 folds, got {num_folds}")
        if num_folds > n:
            raise TuningError(f"Cannot split {n} observations into {num_folds} folds")
        largest_fold = -(-n // num_folds)
        if n - largest_fold < 2:
            raise TuningError(f"Training folds would have fewer than 2 of {n} observations")

        rng = np.random.default_rng(seed)
        assignment = rng.permutation(np.arange(n) % num_folds)
        return cls(num_folds=num_folds, fold_assignment=assignment, seed=seed)

    @property
    def n(self) -> int:
        return len(self.fold_assignment)

    def test_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_assignment == fold)

    def training_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_assignment != fold)


@dataclass(frozen=True)
class TracePoint:
    """One evaluated (lambda_s, lambda_d) configuration for G models."""
    lambda_s: float
    lambda_d: float
    cv_mspe: float
    converged: bool
    outer_iteration: int = 0
    sweep: Axis = "lambda_s"
    num_models: int = 1

    def to_dict(self):
        return {
            "lambda_s": self.lambda_s,
            "lambda_d": self.lambda_d,
            "cv_mspe": self.cv_mspe,
            "converged": self.converged,
            "outer_iteration": self.outer_iteration,
            "sweep": self.sweep,
            "num_models": self.num_models,
        }


@dataclass
class TuningResult:
    """Selected penalties, the full-data bundle fitted at them, and the search trace."""
    lambda_s_opt: float
    lambda_d_opt: float
    num_models: int
    alpha: float
    cv_mspe: float
    bundle: CoefficientBundle
    trace: List[TracePoint] = field(default_factory=list)
    model_count_trace: List[Tuple[int, Optional[float]]] = field(default_factory=list)
    outer_iterations: int = 0
    non_converged: int = 0

    @property
    def spec(self) -> PenaltySpec:
        return PenaltySpec(alpha=self.alpha, lambda_s=self.lambda_s_opt,
                           lambda_d=self.lambda_d_opt, num_models=self.num_models)


@dataclass(frozen=True)
class _Fold:
    index: int
    test_rows: np.ndarray
    design: StandardizedDesign


@dataclass
class _SweepOutcome:
    mspe: np.ndarray
    converged: np.ndarray
    bundles: List[CoefficientBundle]


def parallel_map(func: Callable[[T], R], items: Sequence[T], threads: int) -> List[R]:
    """Map in input order, on a thread pool when threads > 1."""
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(func, items))


def _cold(settings: SolverSettings) -> SolverSettings:
    return settings.warm(None)


def lambda_s_max(design: StandardizedDesign, alpha: float, lambda_d: float = 0.0) -> float:
    """
    Smallest lambda_s for which every model is null: max_j |x_j'y| / (n alpha).

    The same value holds for any lambda_d. Starting from zero, the diversity
    term of the first update is zero, so a cold-started fit is null exactly
    when every |x_j'y| / n is at most alpha * lambda_s.

    Raises:
        UnsupportedPenaltyError: alpha = 0, where the l1 threshold is undefined
    """
    if alpha <= 0:
        raise UnsupportedPenaltyError("lambda_s_max is undefined for alpha = 0 (pure ridge)")
    return float(np.max(np.abs(design.x.T @ design.y))) / (design.n * alpha)


@dataclass(frozen=True)
class DiversityThreshold:
    """Smallest disjoint lambda_d found by the search, and the fit there."""
    value: float
    bundle: CoefficientBundle
    separated: bool = True


def spread_start(bundle: CoefficientBundle) -> CoefficientBundle:
    """
    Deal the active variables of a shared fit out to the models in turn.

    Variables are taken by decreasing |averaged coefficient|; the k-th goes to
    model k mod G with that coefficient. The result is pairwise disjoint.
    """
    average = bundle.beta.mean(axis=1)
    active = np.flatnonzero(average)
    order = active[np.argsort(-np.abs(average[active]), kind="stable")]
    beta = np.zeros_like(bundle.beta)
    for k, j in enumerate(order):
        beta[j, k % bundle.num_models] = average[j]
    return CoefficientBundle(beta)


def _descend(design: StandardizedDesign, spec: PenaltySpec, settings: SolverSettings,
             start: CoefficientBundle,
             accept: Callable[[CoefficientBundle], bool]) -> Optional[DiversityThreshold]:
    """
    Bracket an accepted lambda_d from the start bundle, then walk down warm-started.

    A disjoint fit stays put under warm starts for as long as it is a coordinate-wise
    minimizer, so the walk stops at the first grid value where it breaks.
    """
    def run(value: float, initial: CoefficientBundle) -> CoefficientBundle:
        return fit(design, spec.with_penalties(lambda_d=value), settings.warm(initial)).bundle

    upper = 1.0 + spec.ridge_factor
    bundle = run(upper, start)
    for _ in range(MAX_BRACKET_STEPS):
        if accept(bundle):
            break
        upper *= 2.0
        bundle = run(upper, start)
    else:
        return None

    for _ in range(MAX_BRACKET_STEPS):
        halved = run(upper / 2.0, bundle)
        if not accept(halved):
            break
        upper, bundle = upper / 2.0, halved

    value = upper
    for candidate in np.linspace(upper, upper / 2.0, REFINE_POINTS)[1:]:
        refined = run(float(candidate), bundle)
        if not accept(refined):
            break
        value, bundle = float(candidate), refined
    return DiversityThreshold(value=value, bundle=bundle)


def find_lambda_d_max(design: StandardizedDesign, spec: PenaltySpec,
                      settings: Optional[SolverSettings] = None) -> DiversityThreshold:
    """
    Smallest lambda_d at which the fitted models have pairwise disjoint supports.

    The search starts from the lambda_d = 0 fit with its active variables dealt
    out to the models (spread_start), brackets by doubling from 1 + (1-alpha)lambda_s,
    halves while the fit stays disjoint, and refines on a linear grid walking down
    from the last disjoint value. Fits where one model is empty while another holds
    several variables are not accepted; when no other disjoint fit can be reached the
    search falls back to plain disjointness.

    Raises:
        NullModelError: the fit at lambda_d = 0 is already null
        TuningError: no disjoint fit found while bracketing
    """
    settings = _cold(settings or SolverSettings())
    shared = fit(design, spec.with_penalties(lambda_d=0.0), settings).bundle
    if spec.num_models == 1:
        return DiversityThreshold(value=0.0, bundle=shared)
    if shared.is_null():
        raise NullModelError(
            f"All models are null at lambda_s={spec.lambda_s:.4g}; lambda_d_max is undefined")

    start = spread_start(shared)
    found = _descend(design, spec, settings, start, CoefficientBundle.is_separated)
    if found is None:
        logger.info("No disjoint fit uses every model; accepting any disjoint fit")
        found = _descend(design, spec, settings, start, CoefficientBundle.is_disjoint)
        if found is None:
            raise TuningError(f"No disjoint fit found at lambda_s={spec.lambda_s:.4g}")
        found = replace(found, separated=False)
    return found


def lambda_d_max(design: StandardizedDesign, spec: PenaltySpec,
                 settings: Optional[SolverSettings] = None) -> float:
    """Value of find_lambda_d_max; 0 for a single model."""
    if spec.num_models == 1:
        return 0.0
    return find_lambda_d_max(design, spec, settings).value


def build_grid(max_value: float, p: int, n: int, include_zero: bool = False,
               num_points: int = GRID_POINTS) -> PenaltyGrid:
    """
    Log-equispaced descending grid from max_value down to epsilon*max_value.

    epsilon is 1e-4 when p < n and 1e-2 otherwise.

    Raises:
        TuningError: max_value is not positive
    """
    if max_value <= 0:
        raise TuningError(f"Grid maximum must be positive, got {max_value}; "
                          "the response is uncorrelated with every column")
    epsilon = 1e-4 if p < n else 1e-2
    values = np.geomspace(max_value, epsilon * max_value, num_points)
    if include_zero:
        values = np.append(values, 0.0)
    return PenaltyGrid(values=values, max_value=float(max_value), epsilon=epsilon,
                       includes_zero=include_zero)


def _fold_designs(design: StandardizedDesign, plan: CvPlan) -> List[_Fold]:
    if plan.n != design.n:
        raise ValueError(f"CV plan covers {plan.n} observations, design has {design.n}")
    folds = []
    for index in range(plan.num_folds):
        x_train, y_train = design.subset(plan.training_rows(index))
        try:
            fold_design = standardize(x_train, y_train, design.feature_names or None)
        except DegenerateInputError as e:
            raise FoldDegenerateError(index, e.column) from e
        folds.append(_Fold(index=index, test_rows=plan.test_rows(index), design=fold_design))
    return folds


def _held_out_errors(design: StandardizedDesign, fold: _Fold, bundle: CoefficientBundle) -> np.ndarray:
    """Squared errors of the averaged model on the held-out rows, in full-data standardized units."""
    coef, intercepts = destandardize(bundle, fold.design)
    averaged = average_coefficients(coef, intercepts)
    predictions = predict(averaged, design.x[fold.test_rows])
    return (design.y[fold.test_rows] - predictions) ** 2


def cv_mspe(design: StandardizedDesign, spec: PenaltySpec, plan: CvPlan,
            settings: Optional[SolverSettings] = None, threads: int = 1) -> float:
    """
    Cross-validated mean squared prediction error of the averaged model.

    Each training fold is re-standardized on its own observations; predictions
    are made for the held-out rows and the squared errors averaged over all n.

    Raises:
        FoldDegenerateError: a training fold has a constant column or response
    """
    settings = settings or SolverSettings()
    folds = _fold_designs(design, plan)

    def run(fold: _Fold) -> np.ndarray:
        return _held_out_errors(design, fold, fit(fold.design, spec, _cold(settings)).bundle)

    errors = parallel_map(run, folds, threads)
    return float(np.concatenate(errors).sum() / design.n)


def _run_path(design: StandardizedDesign, spec: PenaltySpec, axis: Axis, values: np.ndarray,
              settings: SolverSettings) -> List[FitResult]:
    results = []
    previous: Optional[CoefficientBundle] = None
    for value in values:
        result = fit(design, spec.with_penalties(**{axis: float(value)}), settings.warm(previous))
        results.append(result)
        previous = result.bundle
    return results


def sweep(design: StandardizedDesign, spec: PenaltySpec, axis: Axis, values: np.ndarray,
          plan: CvPlan, settings: Optional[SolverSettings] = None, warm_start: bool = True,
          threads: int = 1, folds: Optional[List[_Fold]] = None) -> _SweepOutcome:
    """
    Evaluate the CV MSPE at every grid value along one penalty axis.

    With warm_start each fold (and the full data) follows the grid in order and
    paths run in parallel; without it every (path, grid value) fit is an
    independent cold start and all of them run in parallel.
    """
    settings = settings or SolverSettings()
    folds = folds if folds is not None else _fold_designs(design, plan)
    designs = [fold.design for fold in folds] + [design]

    if warm_start:
        paths = parallel_map(
            lambda d: _run_path(d, spec, axis, values, settings), designs, threads)
    else:
        jobs = [(d, float(v)) for d in designs for v in values]
        flat = parallel_map(
            lambda job: fit(job[0], spec.with_penalties(**{axis: job[1]}), _cold(settings)),
            jobs, threads)
        paths = [flat[i * len(values):(i + 1) * len(values)] for i in range(len(designs))]

    mspe = np.zeros(len(values))
    converged = np.ones(len(values), dtype=bool)
    for fold, path in zip(folds, paths[:-1]):
        for k, result in enumerate(path):
            mspe[k] += _held_out_errors(design, fold, result.bundle).sum()
            converged[k] &= result.converged
    mspe /= design.n
    for k, result in enumerate(paths[-1]):
        converged[k] &= result.converged

    return _SweepOutcome(mspe=mspe, converged=converged,
                         bundles=[result.bundle for result in paths[-1]])


def tune(design: StandardizedDesign, alpha: float = 0.75, num_models: int = 2,
         plan: Optional[CvPlan] = None, settings: Optional[SolverSettings] = None,
         threads: int = 1, warm_start: bool = True, rel_tol: float = 1e-4,
         max_outer_iterations: int = 10, num_points: int = GRID_POINTS) -> TuningResult:
    """
    Alternate lambda_s and lambda_d sweeps until the CV MSPE stops decreasing.

    Args:
        design: standardized data
        alpha: elastic-net mixing, fixed
        num_models: G
        plan: fold assignment (10 folds, seed 0 by default)
        settings: coordinate-descent stopping rule
        threads: worker threads for folds / grid points
        warm_start: warm-start along each sweep; False evaluates all points independently
        rel_tol: an outer iteration must improve the best CV MSPE by this relative amount
        max_outer_iterations: bound on lambda_s / lambda_d alternations
        num_points: grid size per sweep

    Returns:
        TuningResult at the trace minimum (first one on ties)
    """
    settings = settings or SolverSettings()
    plan = plan or CvPlan.create(design.n)
    folds = _fold_designs(design, plan)
    base = PenaltySpec(alpha=alpha, lambda_s=0.0, lambda_d=0.0, num_models=num_models)

    trace: List[TracePoint] = []
    best_bundle: Optional[CoefficientBundle] = None
    best_mspe = np.inf
    lambda_s_opt, lambda_d_opt = 0.0, 0.0
    iterations = 0

    def record(outcome: _SweepOutcome, axis: Axis, values: np.ndarray,
               fixed: PenaltySpec, iteration: int) -> Tuple[float, float]:
        nonlocal best_bundle, best_mspe
        for k, value in enumerate(values):
            point = fixed.with_penalties(**{axis: float(value)})
            trace.append(TracePoint(point.lambda_s, point.lambda_d, float(outcome.mspe[k]),
                                    bool(outcome.converged[k]), iteration, axis,
                                    num_models))
            if outcome.mspe[k] < best_mspe:
                best_mspe = float(outcome.mspe[k])
                best_bundle = outcome.bundles[k]
        k_opt = int(np.argmin(outcome.mspe))
        return float(values[k_opt]), float(outcome.mspe[k_opt])

    previous_best = np.inf
    for iteration in range(max_outer_iterations):
        iterations = iteration + 1

        s_max = lambda_s_max(design, alpha)
        s_grid = build_grid(s_max * (1.0 + NULL_MARGIN), design.p, design.n, num_points=num_points)
        fixed = base.with_penalties(lambda_d=lambda_d_opt)
        outcome = sweep(design, fixed, "lambda_s", s_grid.values, plan, settings,
                        warm_start, threads, folds)
        lambda_s_opt, iteration_best = record(outcome, "lambda_s", s_grid.values, fixed, iteration)
        logger.info(f"Outer iteration {iteration}: lambda_s={lambda_s_opt:.4g} "
                    f"(lambda_d={lambda_d_opt:.4g}), CV MSPE {iteration_best:.5g}")

        if num_models > 1:
            fixed = base.with_penalties(lambda_s=lambda_s_opt)
            try:
                d_max = lambda_d_max(design, fixed, settings)
            except NullModelError:
                logger.info(f"Null fit at lambda_s={lambda_s_opt:.4g}; diversity has no effect")
                d_max = 0.0
            if d_max > 0:
                d_grid = build_grid(d_max, design.p, design.n, include_zero=True,
                                    num_points=num_points)
                outcome = sweep(design, fixed, "lambda_d", d_grid.values, plan, settings,
                                warm_start, threads, folds)
                lambda_d_opt, d_best = record(outcome, "lambda_d", d_grid.values, fixed, iteration)
                iteration_best = min(iteration_best, d_best)
                logger.info(f"Outer iteration {iteration}: lambda_d={lambda_d_opt:.4g}, "
                            f"CV MSPE {d_best:.5g}")

        if num_models == 1 or not iteration_best < previous_best * (1.0 - rel_tol):
            break
        previous_best = iteration_best

    if best_bundle is None:
        raise TuningError("Cross-validation produced no finite CV MSPE")

    optimum = trace[int(np.argmin([point.cv_mspe for point in trace]))]
    non_converged = sum(not point.converged for point in trace)
    if non_converged:
        logger.warning(f"{non_converged} grid points had non-converged fits")

    return TuningResult(
        lambda_s_opt=optimum.lambda_s,
        lambda_d_opt=optimum.lambda_d,
        num_models=num_models,
        alpha=alpha,
        cv_mspe=optimum.cv_mspe,
        bundle=best_bundle,
        trace=trace,
        outer_iterations=iterations,
        non_converged=non_converged,
    )


def select_num_models(design: StandardizedDesign,
                      candidates: Sequence[int] = DEFAULT_MODEL_COUNTS,
                      alpha: float = 0.75, plan: Optional[CvPlan] = None,
                      settings: Optional[SolverSettings] = None, threads: int = 1,
                      **tune_options) -> TuningResult:
    """
    Tune each candidate number of models and keep the lowest CV MSPE.

    Ties go to the smaller G. A candidate that fails is logged and skipped. The
    returned trace holds the points of every successful candidate in visit order.

    Raises:
        TuningError: every candidate failed
    """
    if not candidates:
        raise ValueError("At least one candidate number of models is required")
    plan = plan or CvPlan.create(design.n)

    best: Optional[TuningResult] = None
    counts: List[Tuple[int, Optional[float]]] = []
    trace: List[TracePoint] = []
    failures = []
    for num_models in sorted(set(candidates)):
        try:
            result = tune(design, alpha, num_models, plan, settings, threads, **tune_options)
        except SplitRegError as e:
            logger.warning(f"Tuning failed for G={num_models}: {e}")
            counts.append((num_models, None))
            failures.append(f"G={num_models}: {e}")
            continue
        counts.append((num_models, result.cv_mspe))
        trace.extend(result.trace)
        logger.info(f"G={num_models}: CV MSPE {result.cv_mspe:.5g}")
        if best is None or result.cv_mspe < best.cv_mspe:
            best = result

    if best is None:
        raise TuningError("Tuning failed for every candidate; " + "; ".join(failures))
    return replace(best, model_count_trace=counts, trace=trace,
                   non_converged=sum(not point.converged for point in trace))
