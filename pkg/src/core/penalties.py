"""
Penalty terms and objective evaluation.

The SplitReg objective sums, over the G models, the least-squares loss, an
elastic-net sparsity penalty and a diversity penalty that charges
|beta_j^g| |beta_j^h| for every pair of models sharing variable j.
"""

import numpy as np

from core.errors import DimensionMismatchError
from core.models import CoefficientBundle, PenaltySpec
from core.standardize import StandardizedDesign


def soft_threshold(z: float, gamma: float) -> float:
    """sign(z) * max(0, |z| - gamma)."""
    if gamma < 0:
        raise ValueError(f"Threshold must be non-negative, got {gamma}")
    magnitude = abs(z) - gamma
    if magnitude <= 0:
        return 0.0
    return magnitude if z > 0 else -magnitude


def diversity_penalty(bundle: CoefficientBundle) -> float:
    """
    Total diversity term without lambda_d.

    Returns (1/2) sum_g sum_{h != g} sum_j |beta_j^g| |beta_j^h|, which is zero
    exactly when the models use disjoint sets of variables.
    """
    a = np.abs(bundle.beta)
    row_sums = a.sum(axis=1)
    return 0.5 * float(np.sum(row_sums ** 2 - np.sum(a ** 2, axis=1)))


def elastic_net_penalty(beta: np.ndarray, alpha: float) -> float:
    """(1 - alpha)/2 ||beta||_2^2 + alpha ||beta||_1 for a single coefficient vector."""
    return 0.5 * (1.0 - alpha) * float(beta @ beta) + alpha * float(np.sum(np.abs(beta)))


def _check_dimensions(design: StandardizedDesign, bundle: CoefficientBundle,
                      spec: PenaltySpec) -> None:
    if bundle.p != design.p:
        raise DimensionMismatchError(
            f"Bundle has {bundle.p} rows, design has {design.p} columns")
    if bundle.num_models != spec.num_models:
        raise DimensionMismatchError(
            f"Bundle has {bundle.num_models} models, penalty spec expects {spec.num_models}")


def objective(design: StandardizedDesign, bundle: CoefficientBundle, spec: PenaltySpec) -> float:
    """
    Evaluate the SplitReg objective model by model.

    Sum over g of (1/2n)||y - X beta^g||^2 + lambda_s P_s(beta^g)
    + (lambda_d/2) sum_{h != g} sum_j |beta_j^g| |beta_j^h|.
    """
    _check_dimensions(design, bundle, spec)
    n = design.n
    beta = bundle.beta
    a = np.abs(beta)

    total = 0.0
    for g in range(spec.num_models):
        residual = design.y - design.x @ beta[:, g]
        loss = float(residual @ residual) / (2.0 * n)
        sparsity = spec.lambda_s * elastic_net_penalty(beta[:, g], spec.alpha)
        others = a.sum(axis=1) - a[:, g]
        diversity = 0.5 * spec.lambda_d * float(a[:, g] @ others)
        total += loss + sparsity + diversity
    return total


def objective_matrix_form(design: StandardizedDesign, bundle: CoefficientBundle,
                          spec: PenaltySpec) -> float:
    """
    Evaluate the objective as a multivariate regression on Y = [y, ..., y].

    (1/2n)||Y - X B||_F^2 + lambda_s((1-alpha)/2 ||B||_F^2 + alpha ||B||_1)
    + (lambda_d/2)(|| |B|^T |B| ||_1 - ||B||_F^2)
    """
    _check_dimensions(design, bundle, spec)
    beta = bundle.beta
    big_y = np.repeat(design.y[:, None], spec.num_models, axis=1)
    frob_sq = float(np.sum(beta ** 2))
    abs_beta = np.abs(beta)

    loss = float(np.sum((big_y - design.x @ beta) ** 2)) / (2.0 * design.n)
    sparsity = spec.lambda_s * (0.5 * (1.0 - spec.alpha) * frob_sq + spec.alpha * float(abs_beta.sum()))
    gram = abs_beta.T @ abs_beta
    diversity = 0.5 * spec.lambda_d * (float(np.abs(gram).sum()) - frob_sq)
    return loss + sparsity + diversity
