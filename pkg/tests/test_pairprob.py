import math

import numpy as np
import pytest

from suropt import (h_prob, link_coefficients, mc_pair_expectations, norm_cdf,
                    pair_geometry, q_prob, r_prob)
from conftest import DenseKrigingOracle, random_model


def _random_pair(rng, **kwargs):
    post = random_model(rng, **kwargs)
    dim = post.dim
    return post, rng.uniform(0, 1, dim), rng.uniform(0, 1, dim)


class TestLinkCoefficients:
    def test_self_pair_is_coincident(self, rng):
        post, x, _ = _random_pair(rng)
        link = link_coefficients(post, x, x, a=0.0, b=0.0)
        assert link.coincident
        assert link.rho == pytest.approx(1.0, abs=1e-9)

    def test_uncorrelated_equal_scales_nu(self):
        # nu = -s+ / sqrt(s^2 + s+^2) = -1/sqrt(2) when c = 0 and scales match
        from suropt.pairprob import geometry_from_moments
        geom = geometry_from_moments(mean_x=[0.3], sd_x=[0.8], mean_plus=0.1,
                                     sd_plus=0.8, cov=[0.0], variance=1.0)
        assert geom.nu[0] == pytest.approx(-1 / math.sqrt(2), abs=1e-12)
        assert geom.rho[0] == 0.0

    def test_against_dense_oracle(self, rng):
        for _ in range(5):
            post, x, x_plus = _random_pair(rng, n=6, dim=2)
            oracle = DenseKrigingOracle(post.design, post.kernel)
            geom = pair_geometry(post, x, x_plus)
            sx = math.sqrt(oracle.var(x))
            sp = math.sqrt(oracle.var(x_plus))
            c = oracle.cov(x, x_plus)
            w = math.sqrt(oracle.var(x) + oracle.var(x_plus) - 2 * c)
            assert geom.rho == pytest.approx(c / (sx * sp), abs=1e-9)
            assert geom.eta == pytest.approx(
                (oracle.mean(x_plus) - oracle.mean(x)) / w, abs=1e-9)
            assert geom.nu == pytest.approx((c - sp * sp) / (sp * w), abs=1e-9)


class TestClosedForms:
    def test_independence_factorizations(self):
        from suropt.pairprob import geometry_from_moments
        geom = geometry_from_moments([0.2], [1.0], -0.1, 0.7, [0.0], 1.0)
        a, b = 0.4, 0.6
        link = geom.link(a, b)
        b_bar = (b - -0.1) / 0.7
        a_til = (a - 0.2) / 1.0
        assert q_prob(link) == pytest.approx(norm_cdf(b_bar) * norm_cdf(a_til), abs=1e-12)
        assert r_prob(link) == pytest.approx((1 - norm_cdf(b_bar)) * norm_cdf(a_til), abs=1e-12)

    def test_limits_in_candidate_threshold(self, rng):
        post, x, x_plus = _random_pair(rng)
        a = 0.3
        link_hi = link_coefficients(post, x, x_plus, a, b=np.inf)
        assert q_prob(link_hi) == pytest.approx(norm_cdf(link_hi.a_tilde), abs=1e-12)
        assert h_prob(link_coefficients(post, x, x_plus, a, b=-np.inf)) == 0.0
        link_lo = link_coefficients(post, x, x_plus, a, b=-np.inf)
        assert r_prob(link_lo) == pytest.approx(norm_cdf(link_lo.a_tilde), abs=1e-12)

    def test_exchangeable_pair_is_half(self):
        # c = 0, equal means and scales, no candidate cap: P(Y <= Y+) = 1/2
        from suropt.pairprob import geometry_from_moments
        geom = geometry_from_moments([0.5], [0.9], 0.5, 0.9, [0.0], 1.0)
        assert h_prob(geom.link(0.0, np.inf)) == pytest.approx(0.5, abs=1e-12)

    def test_total_probability_identity(self, rng):
        for _ in range(20):
            post, x, x_plus = _random_pair(rng)
            a, b = rng.normal(0, 1.5, 2)
            link = link_coefficients(post, x, x_plus, a, b)
            assert q_prob(link) + r_prob(link) == pytest.approx(
                norm_cdf(link.a_tilde), abs=1e-12)

    def test_monotonicity_and_bounds(self, rng):
        post, x, x_plus = _random_pair(rng)
        bs = np.linspace(-3, 3, 13)
        geom = pair_geometry(post, x, x_plus)
        a = 0.2
        qs = [q_prob(geom.link(a, b)) for b in bs]
        hs = [h_prob(geom.link(a, b)) for b in bs]
        assert np.all(np.diff(qs) >= -1e-12)
        assert np.all(np.diff(hs) >= -1e-12)
        a_vals = np.linspace(-3, 3, 13)
        qs_a = [q_prob(geom.link(a, 0.1)) for a in a_vals]
        assert np.all(np.diff(qs_a) >= -1e-12)
        for b in bs:
            link = geom.link(a, b)
            assert 0.0 <= h_prob(link) <= norm_cdf(link.b_bar) + 1e-12

    def test_vectorized_targets(self, rng):
        post = random_model(rng, n=6)
        xs = rng.uniform(0, 1, (15, 1))
        x_plus = np.array([0.4])
        link = link_coefficients(post, xs, x_plus, a=0.1, b=0.2)
        qv = q_prob(link)
        assert qv.shape == (15,)
        one = q_prob(link_coefficients(post, xs[4], x_plus, a=0.1, b=0.2))
        assert qv[4] == pytest.approx(one, abs=1e-15)


class TestDegenerateLimits:
    def test_observed_target(self, rng):
        post = random_model(rng, n=5)
        x_obs = post.design.points[1]
        y_obs = post.design.observations[1]
        x_plus = np.array([0.45])
        geom = pair_geometry(post, x_obs, x_plus)
        assert geom.target_deterministic
        above = geom.link(y_obs + 1.0, np.inf)
        below = geom.link(y_obs - 1.0, np.inf)
        assert q_prob(above) == pytest.approx(1.0, abs=1e-12)
        assert q_prob(below) == pytest.approx(0.0, abs=1e-12)

    def test_observed_candidate(self, rng):
        post = random_model(rng, n=5)
        x, _ = rng.uniform(0, 1, 1), None
        x_plus = post.design.points[2]
        y_plus = post.design.observations[2]
        geom = pair_geometry(post, x, x_plus)
        assert geom.candidate_deterministic
        mean_x, var_x = post.predict(np.atleast_1d(x))
        p_beat = norm_cdf((y_plus - mean_x) / math.sqrt(var_x))
        link = geom.link(0.0, y_plus + 0.5)   # cap above the known value
        assert h_prob(link) == pytest.approx(p_beat, abs=1e-9)
        link = geom.link(0.0, y_plus - 0.5)   # cap below: impossible event
        assert h_prob(link) == 0.0
        assert q_prob(geom.link(0.3, y_plus + 0.5)) == pytest.approx(
            norm_cdf(geom.tilde(0.3)), abs=1e-12)

    def test_both_degenerate(self, rng):
        post = random_model(rng, n=5)
        x = post.design.points[0]
        x_plus = post.design.points[3]
        y_x = post.design.observations[0]
        y_p = post.design.observations[3]
        geom = pair_geometry(post, x, x_plus)
        h = h_prob(geom.link(0.0, y_p + 1.0))
        assert h == float(y_x <= y_p)


class TestAgainstSimulation:
    def test_brackets_monte_carlo(self, rng):
        for case in range(6):
            post, x, x_plus = _random_pair(rng, n=int(rng.integers(3, 9)),
                                           dim=int(rng.choice([1, 2])))
            mean_p, _ = post.predict(np.atleast_1d(x_plus))
            mean_x, _ = post.predict(np.atleast_1d(x))
            a = float(mean_x + rng.normal(0, 1))
            b = float(mean_p + rng.normal(0, 1))
            link = link_coefficients(post, x, x_plus, a, b)
            q_hat, r_hat, h_hat = mc_pair_expectations(post, x, x_plus, a, b,
                                                       n_draws=100_000, seed=case)
            assert q_hat.brackets(q_prob(link)), f"q case {case}"
            assert r_hat.brackets(r_prob(link)), f"r case {case}"
            assert h_hat.brackets(h_prob(link)), f"h case {case}"
