"""
Closed-form reference solutions.

These cover the special cases where SplitReg solutions can be written down:
orthogonal designs with two models, two correlated predictors with two models,
and the high-probability prediction-error bound for global solutions. They are
used to check the solver, not to fit data.
"""

from dataclasses import dataclass
from typing import List, Literal, Tuple

import numpy as np

from core.errors import UndefinedThresholdError, UniquenessError, UnsupportedPenaltyError
from core.models import CoefficientBundle, PenaltySpec
from core.penalties import soft_threshold
from core.standardize import StandardizedDesign

# solver comparisons are skipped this close to the shared/split switch
BOUNDARY_TOLERANCE = 1e-6
EQUALITY_TOLERANCE = 1e-12

SolutionKind = Literal["zero", "shared", "split", "boundary"]


@dataclass(frozen=True)
class OrthogonalCase:
    """Marginal correlations r_j = y'x_j / n of an orthogonal design, fitted with G=2."""
    r: np.ndarray
    spec: PenaltySpec

    def __post_init__(self):
        if self.spec.num_models != 2:
            raise UnsupportedPenaltyError("Orthogonal closed forms are stated for two models")
        if np.any(np.abs(self.r) > 1 + 1e-10):
            raise ValueError("Marginal correlations of standardized data satisfy |r_j| <= 1")


@dataclass(frozen=True)
class TwoPredictorCase:
    """Two standardized predictors with correlation rho, fitted with G=2."""
    r1: float
    r2: float
    rho: float
    spec: PenaltySpec

    def __post_init__(self):
        if not -1.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (-1, 1), got {self.rho}")
        if self.spec.num_models != 2:
            raise UnsupportedPenaltyError("Two-predictor closed forms are stated for two models")


@dataclass(frozen=True)
class FeatureSolution:
    """
    Solution for one feature of an orthogonal design.

    For kind == "boundary" the solution set is every pair with
    beta^1 + beta^2 == value and beta^1 * beta^2 >= 0.
    """
    kind: SolutionKind
    value: float

    def matches(self, pair: Tuple[float, float], tol: float) -> bool:
        b1, b2 = pair
        if self.kind in ("zero", "shared"):
            return abs(b1 - self.value) <= tol and abs(b2 - self.value) <= tol
        if self.kind == "split":
            return ((abs(b1 - self.value) <= tol and abs(b2) <= tol)
                    or (abs(b2 - self.value) <= tol and abs(b1) <= tol))
        return abs(b1 + b2 - self.value) <= tol and b1 * b2 >= -tol


def diversity_boundary(spec: PenaltySpec) -> float:
    """lambda_d at which the orthogonal solution switches from shared to split: 1 + (1-alpha)lambda_s."""
    return 1.0 + spec.ridge_factor


def orthogonal_solution(case: OrthogonalCase) -> List[FeatureSolution]:
    """Per-feature closed form for an orthogonal design and two models."""
    spec = case.spec
    l1 = spec.alpha * spec.lambda_s
    boundary = diversity_boundary(spec)

    solutions = []
    for r_j in np.asarray(case.r, dtype=float):
        if abs(r_j) <= l1:
            solutions.append(FeatureSolution("zero", 0.0))
            continue
        shrunk = soft_threshold(float(r_j), l1)
        if abs(spec.lambda_d - boundary) <= EQUALITY_TOLERANCE:
            solutions.append(FeatureSolution("boundary", shrunk / boundary))
        elif spec.lambda_d < boundary:
            solutions.append(FeatureSolution("shared", shrunk / (boundary + spec.lambda_d)))
        else:
            solutions.append(FeatureSolution("split", shrunk / boundary))
    return solutions


def two_predictor_system(case: TwoPredictorCase) -> Tuple[np.ndarray, np.ndarray]:
    """
    Linear system satisfied when both variables are active in both models.

    Unknowns are ordered (beta_1^1, beta_1^2, beta_2^2, beta_2^1).
    """
    ld, rho = case.spec.lambda_d, case.rho
    matrix = np.array([
        [1.0, ld, 0.0, rho],
        [ld, 1.0, rho, 0.0],
        [0.0, rho, 1.0, ld],
        [rho, 0.0, ld, 1.0],
    ])
    rhs = np.array([case.r1, case.r1, case.r2, case.r2])
    return matrix, rhs


def _system_vector(beta: np.ndarray) -> np.ndarray:
    return np.array([beta[0, 0], beta[0, 1], beta[1, 1], beta[1, 0]])


def two_predictor_both_active(case: TwoPredictorCase) -> CoefficientBundle:
    """
    Unique solution when lambda_s = 0 and both variables are active in both models.

    Raises:
        UniquenessError: lambda_d >= 1 - rho
    """
    if case.spec.lambda_s != 0:
        raise UnsupportedPenaltyError("The both-active closed form requires lambda_s = 0")
    if case.spec.lambda_d >= 1.0 - case.rho:
        raise UniquenessError(
            f"lambda_d={case.spec.lambda_d} >= 1 - rho={1.0 - case.rho}; solution may not be unique")

    matrix, rhs = two_predictor_system(case)
    b11, b12, b22, b21 = np.linalg.solve(matrix, rhs)
    return CoefficientBundle(np.array([[b11, b12], [b21, b22]]))


def two_predictor_residual(bundle: CoefficientBundle, case: TwoPredictorCase) -> float:
    """Max-norm residual of a fitted 2 x 2 bundle in the both-active linear system."""
    matrix, rhs = two_predictor_system(case)
    return float(np.max(np.abs(matrix @ _system_vector(bundle.beta) - rhs)))


def satisfies_sign_pattern(bundle: CoefficientBundle) -> bool:
    """Both variables active in both models, each with the same sign in the two models."""
    beta = bundle.beta
    if np.any(beta == 0):
        return False
    return bool(np.all(np.sign(beta[:, 0]) == np.sign(beta[:, 1])))


def disjoint_coefficients(case: TwoPredictorCase) -> Tuple[float, float]:
    """T_j = soft(r_j, alpha*lambda_s) / (1 + (1-alpha)lambda_s), the coefficients of disjoint models."""
    spec = case.spec
    l1 = spec.alpha * spec.lambda_s
    denominator = diversity_boundary(spec)
    return (soft_threshold(case.r1, l1) / denominator,
            soft_threshold(case.r2, l1) / denominator)


def disjoint_lambda_d_bound(case: TwoPredictorCase) -> float:
    """
    Smallest lambda_d compatible with the two variables sitting in different models.

    Raises:
        UndefinedThresholdError: T_1 or T_2 is zero
    """
    t1, t2 = disjoint_coefficients(case)
    if t1 == 0 or t2 == 0:
        raise UndefinedThresholdError("Disjoint bound is undefined when a thresholded correlation is zero")
    l1 = case.spec.alpha * case.spec.lambda_s
    return max(
        (abs(case.r1 - case.rho * t2) - l1) / abs(t1),
        (abs(case.r2 - case.rho * t1) - l1) / abs(t2),
    )


def two_predictor_single_active(case: TwoPredictorCase, active: int) -> float:
    """
    Shared coefficient of the active variable when the other is inactive in both models.

    Args:
        active: 0 or 1, the index of the active variable
    """
    spec = case.spec
    boundary = diversity_boundary(spec)
    if spec.lambda_d == boundary:
        raise UniquenessError("The single-active closed form excludes lambda_d = 1 + (1-alpha)lambda_s")
    r = case.r1 if active == 0 else case.r2
    return soft_threshold(r, spec.alpha * spec.lambda_s) / (boundary + spec.lambda_d)


def prediction_error_bound(beta0: np.ndarray, spec: PenaltySpec) -> float:
    """
    Right-hand side of the prediction-error bound for global solutions.

    2 alpha lambda_s ||b0||_1 + lambda_s (1-alpha)/2 ||b0||_2^2 + lambda_d (G-1)/2 ||b0||_2^2
    """
    beta0 = np.asarray(beta0, dtype=float)
    l1 = float(np.sum(np.abs(beta0)))
    l2_sq = float(beta0 @ beta0)
    return (2.0 * spec.alpha * spec.lambda_s * l1
            + spec.lambda_s * (1.0 - spec.alpha) / 2.0 * l2_sq
            + spec.lambda_d * (spec.num_models - 1) / 2.0 * l2_sq)


def bound_lambda_s(sigma: float, n: int, p: int, t: float, alpha: float) -> float:
    """Smallest lambda_s for which the bound holds with probability 1 - 2 exp(-t^2/2)."""
    if alpha <= 0:
        raise UnsupportedPenaltyError("The bound requires alpha > 0")
    return sigma * np.sqrt((t ** 2 + 2.0 * np.log(p)) / n) / alpha


def average_prediction_error(design: StandardizedDesign, bundle: CoefficientBundle,
                             beta0: np.ndarray) -> float:
    """(1/2n)||X beta_avg - X beta0||^2, the left-hand side of the bound."""
    gap = design.x @ (bundle.beta.mean(axis=1) - np.asarray(beta0, dtype=float))
    return float(gap @ gap) / (2.0 * design.n)


def random_orthogonal_design(n: int, p: int, rng: np.random.Generator) -> StandardizedDesign:
    """
    Centered design whose columns are orthogonal with (1/n)||x_j||^2 = 1.

    A random Gaussian matrix is centered and orthonormalized; the response is a
    random centered vector scaled to unit second moment.
    """
    if p >= n:
        raise ValueError(f"An orthogonal centered design needs p < n, got p={p}, n={n}")
    gaussian = rng.standard_normal((n, p))
    gaussian -= gaussian.mean(axis=0)
    q, _ = np.linalg.qr(gaussian)
    x = q * np.sqrt(n)

    y = rng.standard_normal(n)
    y -= y.mean()
    y /= np.sqrt(np.mean(y ** 2))
    return StandardizedDesign.from_standardized(x, y)


def marginal_correlations(design: StandardizedDesign) -> np.ndarray:
    """r_j = y'x_j / n."""
    return design.x.T @ design.y / design.n
