"""
Test suite for penalty grids, cross-validation and the alternating search.
"""

import sys
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from core.errors import FoldDegenerateError, NullModelError, TuningError, UnsupportedPenaltyError
from core.models import CoefficientBundle, PenaltySpec, SolverSettings
from core.oracles import random_orthogonal_design
from core.solver import fit
from core.standardize import StandardizedDesign, standardize
from core.tuning import (CvPlan, TuningResult, build_grid, cv_mspe, find_lambda_d_max, lambda_d_max,
                         lambda_s_max, parallel_map, select_num_models, spread_start, sweep, tune)


def small_design(n: int = 40, p: int = 10, seed: int = 0) -> StandardizedDesign:
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, p))
    beta = np.zeros(p)
    beta[:3] = [2.0, -1.5, 1.0]
    y = x @ beta + rng.normal(size=n)
    return standardize(x, y)


class TestGrid:
    """Test cases for build_grid()."""

    @pytest.mark.unit
    def test_low_dimensional_grid(self):
        grid = build_grid(2.0, p=10, n=50)

        assert len(grid) == 100
        assert grid.values[0] == pytest.approx(2.0)
        assert grid.values[-1] == pytest.approx(2e-4)
        assert grid.epsilon == 1e-4
        assert np.all(np.diff(grid.values) < 0)
        ratios = grid.values[1:] / grid.values[:-1]
        assert np.allclose(ratios, ratios[0])

    @pytest.mark.unit
    def test_high_dimensional_grid(self):
        grid = build_grid(1.0, p=200, n=100, num_points=10)

        assert grid.epsilon == 1e-2
        assert grid.values[-1] == pytest.approx(1e-2)
        assert len(grid) == 10

    @pytest.mark.unit
    def test_zero_appended_last(self):
        grid = build_grid(3.0, p=5, n=20, include_zero=True)

        assert len(grid) == 101
        assert grid.values[-1] == 0.0
        assert grid.includes_zero

    @pytest.mark.unit
    def test_positive_maximum_required(self):
        with pytest.raises(TuningError):
            build_grid(0.0, p=5, n=20)


class TestCvPlan:
    """Test cases for fold assignment."""

    @pytest.mark.unit
    def test_balanced_folds(self):
        plan = CvPlan.create(23, num_folds=5, seed=3)
        sizes = np.bincount(plan.fold_assignment, minlength=5)

        assert sizes.sum() == 23
        assert sizes.max() - sizes.min() <= 1
        for fold in range(5):
            rows = np.concatenate([plan.test_rows(fold), plan.training_rows(fold)])
            assert np.array_equal(np.sort(rows), np.arange(23))

    @pytest.mark.unit
    def test_seeded(self):
        first = CvPlan.create(30, 10, seed=1)
        assert np.array_equal(first.fold_assignment, CvPlan.create(30, 10, seed=1).fold_assignment)
        assert not np.array_equal(first.fold_assignment,
                                  CvPlan.create(30, 10, seed=2).fold_assignment)

    @pytest.mark.unit
    @pytest.mark.parametrize("n, folds", [(10, 1), (5, 6), (3, 2)])
    def test_invalid_plans(self, n, folds):
        with pytest.raises(TuningError):
            CvPlan.create(n, folds)


class TestLambdaMax:
    """Test cases for the largest useful penalties."""

    def setup_method(self):
        self.design = small_design()

    @pytest.mark.unit
    @pytest.mark.parametrize("alpha", [0.25, 0.75, 1.0])
    def test_lambda_s_closed_form(self, alpha):
        x, y = self.design.x, self.design.y
        expected = np.max(np.abs(x.T @ y)) / (self.design.n * alpha)

        assert abs(lambda_s_max(self.design, alpha) - expected) <= 1e-12 * max(1.0, expected)

    @pytest.mark.unit
    def test_lambda_s_max_is_tight(self):
        value = lambda_s_max(self.design, 0.75)
        null = fit(self.design, PenaltySpec(alpha=0.75, lambda_s=value * (1 + 1e-9))).bundle
        active = fit(self.design, PenaltySpec(alpha=0.75, lambda_s=value * 0.99)).bundle

        assert null.is_null()
        assert not active.is_null()

    @pytest.mark.unit
    def test_lambda_s_max_with_diversity(self):
        """A cold start sees no diversity penalty on its first update, so lambda_d has no effect."""
        value = lambda_s_max(self.design, 0.75, lambda_d=0.5)
        spec = PenaltySpec(alpha=0.75, lambda_s=value * (1 + 1e-9), lambda_d=0.5, num_models=3)

        assert value == lambda_s_max(self.design, 0.75)
        assert fit(self.design, spec).bundle.is_null()
        assert not fit(self.design, spec.with_penalties(lambda_s=0.9 * value)).bundle.is_null()

    @pytest.mark.unit
    def test_ridge_has_no_lambda_s_max(self):
        with pytest.raises(UnsupportedPenaltyError):
            lambda_s_max(self.design, 0.0)

    @pytest.mark.unit
    def test_lambda_d_max_orthogonal_design(self):
        """With alpha = 1 the orthogonal switch point is lambda_d = 1."""
        design = random_orthogonal_design(60, 8, np.random.default_rng(9))
        spec = PenaltySpec(alpha=1.0, lambda_s=0.01, num_models=2)
        found = find_lambda_d_max(design, spec)

        assert abs(found.value - 1.0) <= 1.0 / 19 + 1e-9
        assert found.value == lambda_d_max(design, spec)
        assert found.separated
        assert found.bundle.is_separated()
        assert np.all(found.bundle.nonzero_counts() > 0)

    @pytest.mark.unit
    def test_lambda_d_max_gives_disjoint_models(self):
        spec = PenaltySpec(alpha=0.75, lambda_s=0.05, num_models=3)
        found = find_lambda_d_max(self.design, spec)

        assert found.value > 0
        assert found.bundle.is_disjoint()
        assert found.bundle.num_models == 3

    @pytest.mark.unit
    def test_lambda_d_max_single_model(self):
        assert lambda_d_max(self.design, PenaltySpec(lambda_s=0.05, num_models=1)) == 0.0

    @pytest.mark.unit
    def test_lambda_d_max_null_fit(self):
        spec = PenaltySpec(alpha=0.75, lambda_s=2.0 * lambda_s_max(self.design, 0.75), num_models=2)
        with pytest.raises(NullModelError):
            lambda_d_max(self.design, spec)

    @pytest.mark.unit
    def test_spread_start_deals_variables_by_size(self):
        shared = CoefficientBundle(np.array([[3.0, 3.0], [0.0, 0.0], [-5.0, -5.0], [1.0, 1.0]]))
        start = spread_start(shared)

        assert np.array_equal(start.beta, [[0.0, 3.0], [0.0, 0.0], [-5.0, 0.0], [1.0, 0.0]])
        assert start.is_separated()

    @pytest.mark.unit
    def test_separated_rejects_one_model_holding_everything(self):
        everything_in_one = CoefficientBundle(np.array([[0.5, 0.0], [0.4, 0.0]]))
        split = CoefficientBundle(np.array([[0.5, 0.0], [0.0, 0.4]]))
        fewer_variables_than_models = CoefficientBundle(np.array([[0.5, 0.0, 0.0], [0.0, 0.0, 0.4]]))

        assert everything_in_one.is_disjoint()
        assert not everything_in_one.is_separated()
        assert split.is_separated()
        assert fewer_variables_than_models.is_separated()
        assert not CoefficientBundle(np.array([[0.5, 0.1], [0.0, 0.4]])).is_separated()



class TestCrossValidation:
    """Test cases for cv_mspe() and sweep()."""

    def setup_method(self):
        self.design = small_design(n=36, p=6, seed=4)
        self.plan = CvPlan.create(self.design.n, num_folds=4, seed=0)
        self.settings = SolverSettings(delta=1e-16)

    @pytest.mark.unit
    def test_null_model_error_is_response_variance(self):
        """An all-zero fit predicts the training-fold mean of y."""
        spec = PenaltySpec(lambda_s=10.0 * lambda_s_max(self.design, 0.75), num_models=2)
        value = cv_mspe(self.design, spec, self.plan)

        expected = 0.0
        for fold in range(4):
            test, train = self.plan.test_rows(fold), self.plan.training_rows(fold)
            expected += np.sum((self.design.y[test] - self.design.y[train].mean()) ** 2)
        assert value == pytest.approx(expected / self.design.n, rel=1e-10)

    @pytest.mark.unit
    def test_threads_do_not_change_the_result(self):
        spec = PenaltySpec(lambda_s=0.05, lambda_d=0.3, num_models=2)
        serial = cv_mspe(self.design, spec, self.plan, self.settings, threads=1)
        threaded = cv_mspe(self.design, spec, self.plan, self.settings, threads=4)
        assert serial == threaded

    @pytest.mark.unit
    def test_cold_sweep_matches_pointwise_cv(self):
        spec = PenaltySpec(lambda_s=0.05, num_models=2)
        values = np.array([0.6, 0.2, 0.0])
        outcome = sweep(self.design, spec, "lambda_d", values, self.plan, self.settings,
                        warm_start=False)

        for k, value in enumerate(values):
            expected = cv_mspe(self.design, spec.with_penalties(lambda_d=float(value)), self.plan,
                               self.settings)
            assert outcome.mspe[k] == pytest.approx(expected, rel=1e-12)
        assert len(outcome.bundles) == 3

    @pytest.mark.unit
    def test_warm_and_cold_agree_without_diversity(self):
        """The elastic-net path has a unique solution when n > p."""
        spec = PenaltySpec(alpha=0.75, lambda_s=0.0, num_models=2)
        values = build_grid(lambda_s_max(self.design, 0.75), self.design.p, self.design.n,
                            num_points=15).values
        warm = sweep(self.design, spec, "lambda_s", values, self.plan, self.settings, True)
        cold = sweep(self.design, spec, "lambda_s", values, self.plan, self.settings, False,
                     threads=3)

        assert np.allclose(warm.mspe, cold.mspe, rtol=1e-6)
        assert warm.converged.all() and cold.converged.all()

    @pytest.mark.unit
    def test_warm_and_cold_agree_with_diversity(self):
        """
        Below the smallest eigenvalue of x'x/n the two-model objective is strictly convex,
        so warm and cold paths reach the same fits.
        """
        design = small_design(n=200, p=5, seed=11)
        plan = CvPlan.create(design.n, num_folds=4, seed=1)
        settings = SolverSettings(delta=1e-18)
        assert np.linalg.eigvalsh(design.x.T @ design.x / design.n).min() > 0.4

        spec = PenaltySpec(alpha=0.75, lambda_s=0.0, lambda_d=0.2, num_models=2)
        values = build_grid(lambda_s_max(design, 0.75), design.p, design.n, num_points=12).values
        warm = sweep(design, spec, "lambda_s", values, plan, settings, True)
        cold = sweep(design, spec, "lambda_s", values, plan, settings, False, threads=3)
        assert np.allclose(warm.mspe, cold.mspe, rtol=1e-6)

        spec = spec.with_penalties(lambda_s=0.02)
        values = np.array([0.2, 0.15, 0.1, 0.05, 0.0])
        warm = sweep(design, spec, "lambda_d", values, plan, settings, True)
        cold = sweep(design, spec, "lambda_d", values, plan, settings, False)
        assert np.allclose(warm.mspe, cold.mspe, rtol=1e-6)
        assert warm.converged.all() and cold.converged.all()


    @pytest.mark.unit
    def test_degenerate_fold_is_reported(self):
        x = np.random.default_rng(1).normal(size=(12, 3))
        x[:, 1] = 0.0
        x[0, 1] = 1.0
        design = standardize(x, np.random.default_rng(2).normal(size=12))
        plan = CvPlan.create(12, num_folds=3, seed=0)
        fold = int(plan.fold_assignment[0])

        with pytest.raises(FoldDegenerateError) as excinfo:
            cv_mspe(design, PenaltySpec(lambda_s=0.1), plan)
        assert excinfo.value.fold == fold
        assert excinfo.value.column == "x2"

    @pytest.mark.unit
    def test_parallel_map_keeps_order(self):
        assert parallel_map(lambda v: v * v, list(range(20)), threads=4) == [v * v for v in range(20)]


class TestTune:
    """Test cases for the alternating search."""

    def setup_method(self):
        self.design = small_design(n=40, p=8, seed=2)
        self.plan = CvPlan.create(self.design.n, num_folds=5, seed=0)

    @pytest.mark.unit
    def test_optimum_is_trace_minimum(self):
        result = tune(self.design, alpha=0.75, num_models=2, plan=self.plan, num_points=12)
        scores = [point.cv_mspe for point in result.trace]
        best = result.trace[int(np.argmin(scores))]

        assert result.cv_mspe == min(scores)
        assert (result.lambda_s_opt, result.lambda_d_opt) == (best.lambda_s, best.lambda_d)
        assert result.bundle.num_models == 2
        assert 1 <= result.outer_iterations <= 10
        assert {point.sweep for point in result.trace} == {"lambda_s", "lambda_d"}
        # the pure elastic-net configuration is always evaluated
        assert any(point.lambda_d == 0.0 for point in result.trace)

    @pytest.mark.unit
    def test_single_model_runs_one_sweep(self):
        result = tune(self.design, alpha=1.0, num_models=1, plan=self.plan, num_points=12)

        assert result.outer_iterations == 1
        assert len(result.trace) == 12
        assert result.lambda_d_opt == 0.0
        assert result.spec.num_models == 1

    @pytest.mark.unit
    def test_deterministic(self):
        first = tune(self.design, num_models=2, plan=self.plan, num_points=8)
        second = tune(self.design, num_models=2, plan=self.plan, num_points=8, threads=3)

        assert first.cv_mspe == second.cv_mspe
        assert np.array_equal(first.bundle.beta, second.bundle.beta)
        assert [p.to_dict() for p in first.trace] == [p.to_dict() for p in second.trace]

    @pytest.mark.slow
    def test_pure_noise_selects_near_null_model(self):
        """With no signal the chosen ensemble explains little and CV MSPE stays near 1."""
        scores, explained = [], []
        for seed in range(6):
            rng = np.random.default_rng(100 + seed)
            design = standardize(rng.normal(size=(60, 15)), rng.normal(size=60))
            result = tune(design, alpha=0.75, num_models=2, plan=CvPlan.create(60, 5, seed),
                          num_points=30)
            fitted = design.x @ result.bundle.beta.mean(axis=1)
            scores.append(result.cv_mspe)
            explained.append(float(np.mean(fitted ** 2)))

        assert abs(np.mean(scores) - 1.0) <= 0.1
        assert max(scores) <= 1.1
        assert np.median(explained) <= 0.25



class TestSelectNumModels:
    """Test cases for choosing G."""

    def setup_method(self):
        self.design = small_design(n=20, p=4, seed=6)

    def fake_result(self, num_models: int, score: float) -> TuningResult:
        return TuningResult(lambda_s_opt=0.1, lambda_d_opt=0.0, num_models=num_models, alpha=0.75,
                            cv_mspe=score, bundle=CoefficientBundle.zeros(4, num_models))

    @pytest.mark.unit
    def test_ties_go_to_fewer_models(self):
        scores = {2: 0.5, 5: 0.5, 7: 0.6}
        with patch("core.tuning.tune",
                   side_effect=lambda design, alpha, g, *args, **kwargs: self.fake_result(g, scores[g])):
            result = select_num_models(self.design, [7, 5, 2, 5])

        assert result.num_models == 2
        assert result.model_count_trace == [(2, 0.5), (5, 0.5), (7, 0.6)]

    @pytest.mark.unit
    def test_failed_candidates_are_skipped(self):
        def fake_tune(design, alpha, g, *args, **kwargs):
            if g == 2:
                raise TuningError("no finite score")
            return self.fake_result(g, 0.7)

        with patch("core.tuning.tune", side_effect=fake_tune):
            result = select_num_models(self.design, [2, 5])

        assert result.num_models == 5
        assert result.model_count_trace == [(2, None), (5, 0.7)]

    @pytest.mark.unit
    def test_all_candidates_failing(self):
        with patch("core.tuning.tune", side_effect=TuningError("boom")):
            with pytest.raises(TuningError):
                select_num_models(self.design, [2, 5])

    @pytest.mark.unit
    def test_candidates_required(self):
        with pytest.raises(ValueError):
            select_num_models(self.design, [])

    @pytest.mark.unit
    def test_single_candidate_is_elastic_net_tuning(self):
        design = small_design(n=40, p=8, seed=2)
        plan = CvPlan.create(design.n, num_folds=5, seed=0)
        selected = select_num_models(design, [1], alpha=0.75, plan=plan, num_points=12)
        direct = tune(design, alpha=0.75, num_models=1, plan=plan, num_points=12)

        assert selected.num_models == 1
        assert selected.lambda_d_opt == 0.0
        assert selected.cv_mspe == direct.cv_mspe
        assert selected.lambda_s_opt == direct.lambda_s_opt
        assert np.array_equal(selected.bundle.beta, direct.bundle.beta)
        assert selected.model_count_trace == [(1, direct.cv_mspe)]
        assert [p.to_dict() for p in selected.trace] == [p.to_dict() for p in direct.trace]

    @pytest.mark.unit
    def test_trace_covers_every_candidate_in_order(self):
        design = small_design(n=40, p=8, seed=2)
        plan = CvPlan.create(design.n, num_folds=5, seed=0)
        result = select_num_models(design, [2, 1], alpha=0.75, plan=plan, num_points=8)
        counts = [point.num_models for point in result.trace]

        assert counts == sorted(counts)
        assert set(counts) == {1, 2}
        assert result.cv_mspe == min(point.cv_mspe for point in result.trace)

