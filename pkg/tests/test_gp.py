import math
import warnings

import numpy as np
import pytest

from suropt import (Design, DuplicatePointError, HyperparameterBounds, KernelSpec,
                    TrendBasis, estimate_hyperparameters, fit, kernel_eval,
                    sample_paths, update_moments)
from conftest import DenseKrigingOracle, random_model

MATERN32_AT_ONE_RANGE = (1 + math.sqrt(3)) * math.exp(-math.sqrt(3))  # 0.4833577245965077


class TestKernels:
    def test_zero_distance_returns_variance(self):
        spec = KernelSpec("matern52", 2.3, (0.4, 0.7))
        assert kernel_eval(spec, [0.2, 0.9], [0.2, 0.9]) == pytest.approx(2.3, abs=0)

    def test_matern32_closed_form(self):
        spec = KernelSpec("matern32", 1.0, (0.2,))
        assert kernel_eval(spec, [0.0], [0.2]) == pytest.approx(
            MATERN32_AT_ONE_RANGE, abs=1e-12)

    def test_far_field_vanishes(self):
        spec = KernelSpec("squared_exponential", 1.0, (0.05,))
        assert kernel_eval(spec, [0.0], [1.0]) < 1e-15

    def test_dimension_mismatch(self):
        spec = KernelSpec("matern32", 1.0, (0.2, 0.3))
        with pytest.raises(ValueError):
            kernel_eval(spec, [0.1], [0.2])

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            KernelSpec("matern32", -1.0, (0.2,))
        with pytest.raises(ValueError):
            KernelSpec("cubic", 1.0, (0.2,))
        with pytest.raises(ValueError):
            KernelSpec("matern32", 1.0, (0.0,))


class TestFitPredict:
    def test_single_point_constant_trend(self):
        post = fit(Design([[0.5]], [3.7]), KernelSpec("matern32", 1.0, (0.2,)))
        assert post.beta_hat[0] == pytest.approx(3.7, abs=1e-9)

    def test_interpolation(self, rng):
        post = random_model(rng, n=8)
        mean, var = post.predict(post.design.points)
        assert np.abs(mean - post.design.observations).max() <= 1e-6
        assert var.max() <= 1e-6 * post.kernel.variance

    def test_prior_reversion_far_away(self, rng):
        post = random_model(rng, n=5, ranges=(0.05,))
        far = np.array([25.0])
        mean, var = post.predict(far)
        assert mean == pytest.approx(float(post.beta_hat[0]), abs=1e-9)
        # prior variance plus the trend-uncertainty term
        assert var >= post.kernel.variance

    def test_against_dense_oracle(self, rng):
        pts = rng.uniform(0, 1, (5, 2))
        vals = rng.standard_normal(5)
        spec = KernelSpec("matern52", 1.4, (0.3, 0.5))
        post = fit(Design(pts, vals), spec)
        oracle = DenseKrigingOracle(Design(pts, vals), spec)
        for _ in range(10):
            x = rng.uniform(0, 1, 2)
            x2 = rng.uniform(0, 1, 2)
            mean, var = post.predict(x)
            assert mean == pytest.approx(oracle.mean(x), abs=1e-9)
            assert var == pytest.approx(oracle.var(x), abs=1e-9)
            assert post.posterior_cov(x, x2) == pytest.approx(oracle.cov(x, x2), abs=1e-9)

    def test_posterior_cov_structure(self, rng):
        post = random_model(rng, n=6)
        x, x2 = rng.uniform(0, 1, (2, 1))
        assert post.posterior_cov(x, x2) == pytest.approx(post.posterior_cov(x2, x), abs=1e-12)
        _, var = post.predict(x)
        assert post.posterior_cov(x, x) == pytest.approx(var, abs=1e-12)
        # conditioning on exact data zeroes covariance with observed locations
        assert abs(post.posterior_cov(x, post.design.points[2])) <= 1e-6
        # Cauchy-Schwarz
        _, v2 = post.predict(x2)
        assert abs(post.posterior_cov(x, x2)) <= math.sqrt(var * v2) + 1e-9

    def test_conditioning_reduces_variance(self, rng):
        post = random_model(rng, n=8)
        sub = fit(Design(post.design.points[:3], post.design.observations[:3]),
                  post.kernel, post.trend)
        xs = rng.uniform(0, 1, (50, 1))
        _, var_full = post.predict(xs)
        _, var_sub = sub.predict(xs)
        assert np.all(var_full <= var_sub + 1e-9 * post.kernel.variance)

    def test_design_validation(self):
        with pytest.raises(ValueError):
            Design([[0.1], [0.1]], [1.0, 2.0])
        with pytest.raises(ValueError):
            Design(np.empty((0, 1)), [])


class TestUpdate:
    def test_update_at_new_point_interpolates(self, rng):
        post = random_model(rng, n=5)
        x_new = np.array([0.333])
        mean, var = update_moments(post, x_new, 1.23, x_new)
        assert mean == pytest.approx(1.23, abs=1e-6)
        assert var <= 1e-9

    def test_shift_proportional_to_covariance(self, rng):
        # The moment changes are exactly c/s^2 * (y - m) and c^2/s^2, so an
        # uncorrelated target point is left untouched.
        post = random_model(rng, n=8)
        x_new = np.array([0.77])
        y_new = 1.9
        xs = rng.uniform(0, 1, (20, 1))
        c = post.posterior_cov(xs, x_new[None, :])[:, 0]
        m_new, s2_new = post.predict(x_new)
        m0, v0 = post.predict(xs)
        m1, v1 = update_moments(post, x_new, y_new, xs)
        gain = c / (s2_new + post.nugget)
        assert np.abs((m1 - m0) - gain * (y_new - m_new)).max() <= 1e-12
        assert np.abs((v0 - v1) - gain * c).max() <= 1e-12

    def test_update_matches_refit(self, rng):
        for _ in range(10):
            dim = int(rng.integers(1, 3))
            post = random_model(rng, n=int(rng.integers(3, 9)), dim=dim)
            x_new = rng.uniform(0, 1, dim)
            y_new = float(rng.standard_normal())
            probe = rng.uniform(0, 1, (30, dim))
            m_up, v_up = update_moments(post, x_new, y_new, probe)
            refit = post.update(x_new, y_new)
            m_ref, v_ref = refit.predict(probe)
            scale = math.sqrt(post.kernel.variance)
            assert np.abs(m_up - m_ref).max() <= 1e-6 * scale
            assert np.abs(v_up - v_ref).max() <= 1e-6 * post.kernel.variance
            # conditioning shrinks variance everywhere
            _, v0 = post.predict(probe)
            assert np.all(v_up <= v0 + 1e-12)

    def test_duplicate_rejected(self, rng):
        post = random_model(rng, n=5)
        with pytest.raises(DuplicatePointError):
            post.update(post.design.points[0], 0.0)

    def test_vectorized_hypothetical_values(self, rng):
        post = random_model(rng, n=5)
        x_new = np.array([0.4])
        xs = rng.uniform(0, 1, (7, 1))
        ys = rng.standard_normal(3)
        mean, var = update_moments(post, x_new, ys, xs)
        assert mean.shape == (3, 7)
        assert var.shape == (7,)
        for i, y in enumerate(ys):
            m_i, v_i = update_moments(post, x_new, float(y), xs)
            assert np.allclose(mean[i], m_i, atol=0)
            assert np.allclose(var, v_i, atol=0)


class TestHyperparameters:
    def test_recovery_within_factor_two(self):
        truth = KernelSpec("matern52", 1.0, (0.2,))
        grid = np.linspace(0, 1, 400)[:, None]
        hits = 0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            idx = rng.choice(400, 60, replace=False)
            path = sample_paths(truth, grid, 1, seed=seed)[0]
            est = estimate_hyperparameters(Design(grid[idx], path[idx]),
                                           "matern52", seed=seed)
            hits += 0.5 <= est.ranges[0] / 0.2 <= 2.0
        assert hits >= 16

    def test_flat_data_degenerate_variance(self):
        pts = np.linspace(0, 1, 10)[:, None]
        est = estimate_hyperparameters(Design(pts, np.full(10, 2.0)), "matern32", seed=0)
        assert est.variance <= 1e-6

    def test_collapsed_bounds_returned_verbatim(self, rng):
        pts = rng.uniform(0, 1, (8, 1))
        design = Design(pts, rng.standard_normal(8))
        bounds = HyperparameterBounds(variance=(0.7, 0.7), ranges=((0.25, 0.25),))
        est = estimate_hyperparameters(design, "matern32", bounds=bounds, seed=0)
        assert est.variance == pytest.approx(0.7)
        assert est.ranges[0] == pytest.approx(0.25)

    def test_deterministic_per_seed(self, rng):
        pts = rng.uniform(0, 1, (12, 1))
        design = Design(pts, rng.standard_normal(12))
        a = estimate_hyperparameters(design, "matern32", seed=3)
        b = estimate_hyperparameters(design, "matern32", seed=3)
        assert a == b


class TestSamplePaths:
    def test_seed_determinism(self):
        spec = KernelSpec("matern32", 1.0, (0.2,))
        grid = np.linspace(0, 1, 50)[:, None]
        a = sample_paths(spec, grid, 4, seed=9)
        b = sample_paths(spec, grid, 4, seed=9)
        assert np.array_equal(a, b)
        assert a.shape == (4, 50)

    def test_empirical_covariance(self):
        spec = KernelSpec("matern52", 1.0, (0.3,))
        grid = np.linspace(0, 1, 10)[:, None]
        draws = sample_paths(spec, grid, 2000, seed=1)
        emp = np.cov(draws.T)
        from suropt import kernel_matrix
        K = kernel_matrix(spec, grid)
        # entrywise 5 standard errors; covariance of Gaussian products
        se = np.sqrt((K.diagonal()[:, None] * K.diagonal()[None, :] + K ** 2) / 2000)
        assert np.all(np.abs(emp - K) <= 5 * se)
        assert np.all(np.abs(draws.var(axis=0, ddof=1) - 1.0) <= 0.1)

    def test_grid_guard(self):
        spec = KernelSpec("matern32", 1.0, (0.2,))
        with pytest.raises(ValueError):
            sample_paths(spec, np.zeros((5000, 1)), 1, seed=0)


class TestTrend:
    def test_custom_basis_fits_linear_data(self, rng):
        pts = rng.uniform(0, 1, (12, 1))
        vals = 2.0 + 3.0 * pts[:, 0] + 0.01 * rng.standard_normal(12)
        trend = TrendBasis((lambda X: np.ones(len(X)), lambda X: X[:, 0]))
        post = fit(Design(pts, vals), KernelSpec("matern32", 1.0, (0.3,)), trend)
        mean, _ = post.predict(np.array([0.5]))
        assert mean == pytest.approx(3.5, abs=0.1)
        assert post.beta_hat.shape == (2,)
