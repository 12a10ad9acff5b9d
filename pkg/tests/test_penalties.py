"""
Test suite for penalty terms and the objective.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from core.errors import DimensionMismatchError
from core.models import CoefficientBundle, PenaltySpec
from core.penalties import (diversity_penalty, elastic_net_penalty, objective,
                            objective_matrix_form, soft_threshold)
from core.standardize import standardize


class TestSoftThreshold:
    """Test cases for the soft-thresholding operator."""

    @pytest.mark.unit
    @pytest.mark.parametrize("z, gamma, expected", [
        (3.0, 1.0, 2.0),
        (-0.5, 1.0, 0.0),
        (-2.0, 0.5, -1.5),
        (1.0, 1.0, 0.0),
        (0.7, 0.0, 0.7),
    ])
    def test_values(self, z, gamma, expected):
        assert soft_threshold(z, gamma) == pytest.approx(expected)

    @pytest.mark.unit
    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError):
            soft_threshold(1.0, -0.1)


class TestDiversityPenalty:
    """Test cases for the diversity term."""

    @pytest.mark.unit
    def test_disjoint_supports(self):
        bundle = CoefficientBundle(np.array([[1.0, 0.0, 0.0], [0.0, -2.0, 0.0], [0.0, 0.0, 3.0]]))
        assert diversity_penalty(bundle) == 0.0

    @pytest.mark.unit
    def test_single_model(self):
        assert diversity_penalty(CoefficientBundle(np.array([[1.0], [2.0]]))) == 0.0

    @pytest.mark.unit
    def test_hand_computed_pair(self):
        # |1||2| counted once per unordered pair
        bundle = CoefficientBundle(np.array([[1.0, -2.0], [0.0, 0.0]]))
        assert diversity_penalty(bundle) == pytest.approx(2.0)

    @pytest.mark.unit
    @pytest.mark.parametrize("num_models", [2, 3, 5])
    def test_identical_columns(self, num_models):
        b0 = np.array([0.5, -1.0, 0.0, 2.0])
        bundle = CoefficientBundle(np.repeat(b0[:, None], num_models, axis=1))
        expected = num_models * (num_models - 1) / 2 * float(b0 @ b0)
        assert diversity_penalty(bundle) == pytest.approx(expected)


class TestObjective:
    """Test cases for the objective in its two forms."""

    def setup_method(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(20, 4))
        y = x @ np.array([1.0, 0.0, -1.0, 0.5]) + rng.normal(size=20)
        self.design = standardize(x, y)
        self.rng = rng

    @pytest.mark.unit
    def test_zero_bundle(self):
        spec = PenaltySpec(alpha=0.5, lambda_s=0.3, lambda_d=1.0, num_models=3)
        value = objective(self.design, CoefficientBundle.zeros(4, 3), spec)
        assert value == pytest.approx(1.5, abs=1e-12)

    @pytest.mark.unit
    def test_decouples_without_diversity(self):
        b = np.array([0.3, 0.0, -0.4, 0.1])
        spec = PenaltySpec(alpha=0.75, lambda_s=0.2, lambda_d=0.0, num_models=2)
        single = PenaltySpec(alpha=0.75, lambda_s=0.2, lambda_d=0.0, num_models=1)

        pair = objective(self.design, CoefficientBundle(np.column_stack([b, b])), spec)
        one = objective(self.design, CoefficientBundle(b[:, None]), single)

        assert pair == pytest.approx(2.0 * one, rel=1e-12)

    @pytest.mark.unit
    def test_single_model_is_elastic_net(self):
        b = np.array([0.2, -0.1, 0.0, 0.4])
        spec = PenaltySpec(alpha=0.6, lambda_s=0.5, num_models=1)
        residual = self.design.y - self.design.x @ b
        expected = residual @ residual / (2 * self.design.n) + 0.5 * elastic_net_penalty(b, 0.6)

        assert objective(self.design, CoefficientBundle(b[:, None]), spec) == pytest.approx(expected)

    @pytest.mark.unit
    @pytest.mark.parametrize("trial", range(5))
    def test_matrix_form_agrees(self, trial):
        beta = self.rng.normal(size=(4, 3))
        beta[self.rng.random(size=beta.shape) < 0.3] = 0.0
        spec = PenaltySpec(alpha=float(self.rng.uniform()), lambda_s=float(self.rng.uniform()),
                           lambda_d=float(self.rng.uniform(0, 3)), num_models=3)
        bundle = CoefficientBundle(beta)

        assert objective_matrix_form(self.design, bundle, spec) == pytest.approx(
            objective(self.design, bundle, spec), rel=1e-12, abs=1e-12)

    @pytest.mark.unit
    def test_dimension_mismatch(self):
        spec = PenaltySpec(lambda_s=0.1, num_models=2)
        with pytest.raises(DimensionMismatchError):
            objective(self.design, CoefficientBundle.zeros(4, 3), spec)
        with pytest.raises(DimensionMismatchError):
            objective_matrix_form(self.design, CoefficientBundle.zeros(5, 2), spec)
