import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtr

import suropt.gaussians as gaussians
from suropt import bvn_cdf, norm_cdf, std_normal

# Frozen with mpmath.ncdf at 30 digits.
PHI_975_ARG = 1.959963985
# Frozen from the tensor-product quadrature oracle below.
BVN_POINT = (0.3, -0.7, 0.6)
BVN_POINT_VALUE = 0.2171672254519064

_ON, _OW = np.polynomial.legendre.leggauss(24)


def bvn_quadrature_oracle(h, k, rho, lo=-8.5, panel=0.5):
    """Tensor-product Gauss-Legendre panels over the raw bivariate density."""
    if h <= lo or k <= lo:
        return 0.0

    def nodes(hi):
        edges = np.append(np.arange(lo, hi, panel), hi)
        mids = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * np.diff(edges)
        return ((mids[:, None] + half[:, None] * _ON[None, :]).ravel(),
                (half[:, None] * _OW[None, :]).ravel())

    xu, wu = nodes(min(h, 8.5))
    xv, wv = nodes(min(k, 8.5))
    det = 1.0 - rho * rho
    U, V = np.meshgrid(xu, xv, indexing="ij")
    dens = np.exp(-(U * U - 2 * rho * U * V + V * V) / (2 * det)) / (2 * np.pi * math.sqrt(det))
    return float(wu @ dens @ wv)


class TestStdNormal:
    def test_origin(self):
        pdf, cdf = std_normal(0.0)
        assert pdf == pytest.approx(1.0 / math.sqrt(2 * math.pi), abs=1e-15)
        assert cdf == 0.5

    def test_tail(self):
        _, cdf = std_normal(8.0)
        assert abs(cdf - 1.0) <= 1e-15

    def test_975_quantile(self):
        _, cdf = std_normal(PHI_975_ARG)
        assert cdf == pytest.approx(0.975, abs=1e-9)

    def test_symmetry(self):
        for u in (-3.2, -0.4, 0.9, 2.5):
            assert std_normal(-u)[1] == pytest.approx(1 - std_normal(u)[1], abs=1e-15)

    @pytest.mark.parametrize("bad", [float("nan"), float("inf"), -float("inf")])
    def test_rejects_nonfinite(self, bad):
        with pytest.raises(ValueError):
            std_normal(bad)


class TestBvnCdf:
    def test_sheppard_identity(self):
        for rho in (-0.99, -0.5, 0.0, 0.3, 0.6, 0.9, 0.99):
            exact = 0.25 + math.asin(rho) / (2 * math.pi)
            assert bvn_cdf(0.0, 0.0, rho) == pytest.approx(exact, abs=1e-10)

    def test_marginalization_sentinels(self):
        for k in (-2.0, 0.0, 1.7):
            for rho in (-0.8, 0.0, 0.8):
                assert bvn_cdf(np.inf, k, rho) == pytest.approx(norm_cdf(k), abs=0)
                assert bvn_cdf(k, np.inf, rho) == pytest.approx(norm_cdf(k), abs=0)
                assert bvn_cdf(-np.inf, k, rho) == 0.0

    def test_frozen_quadrature_point(self):
        h, k, rho = BVN_POINT
        assert bvn_quadrature_oracle(h, k, rho) == pytest.approx(BVN_POINT_VALUE, abs=1e-13)
        assert bvn_cdf(h, k, rho) == pytest.approx(BVN_POINT_VALUE, abs=1e-10)

    def test_quadrature_oracle_sample(self, rng):
        for _ in range(60):
            h, k = rng.uniform(-4, 4, 2)
            rho = rng.uniform(-0.99, 0.99)
            assert bvn_cdf(h, k, rho) == pytest.approx(
                bvn_quadrature_oracle(h, k, rho), abs=1e-10)

    def test_perfect_correlation_limits(self, rng):
        for _ in range(30):
            h, k = rng.uniform(-3, 3, 2)
            assert bvn_cdf(h, k, 1.0) == pytest.approx(norm_cdf(min(h, k)), abs=1e-12)
            assert bvn_cdf(h, k, -1.0) == pytest.approx(
                max(0.0, norm_cdf(h) + norm_cdf(k) - 1.0), abs=1e-12)
            # snapping window
            assert bvn_cdf(h, k, 1.0 - 1e-13) == pytest.approx(
                norm_cdf(min(h, k)), abs=1e-12)

    @given(h=st.floats(-6, 6), k=st.floats(-6, 6),
           rho=st.floats(-1, 1, exclude_min=False, exclude_max=False))
    @settings(max_examples=200, deadline=None)
    def test_properties(self, h, k, rho):
        p = bvn_cdf(h, k, rho)
        assert 0.0 <= p <= min(norm_cdf(h), norm_cdf(k)) + 1e-13
        assert p == pytest.approx(bvn_cdf(k, h, rho), abs=1e-13)
        if rho == 0.0:
            assert p == pytest.approx(norm_cdf(h) * norm_cdf(k), abs=1e-12)

    @given(h=st.floats(-4, 4), k=st.floats(-4, 4), rho=st.floats(-0.999, 0.999),
           bump=st.floats(0.01, 1.0))
    @settings(max_examples=150, deadline=None)
    def test_monotone_in_limits(self, h, k, rho, bump):
        base = bvn_cdf(h, k, rho)
        assert bvn_cdf(h + bump, k, rho) >= base - 1e-13
        assert bvn_cdf(h, k + bump, rho) >= base - 1e-13

    def test_independence_factorization_grid(self):
        hs = np.linspace(-5, 5, 11)
        got = bvn_cdf(hs[:, None], hs[None, :], 0.0)
        want = ndtr(hs)[:, None] * ndtr(hs)[None, :]
        assert np.abs(got - want).max() <= 1e-12

    def test_rejects_bad_correlation(self):
        with pytest.raises(ValueError):
            bvn_cdf(0.0, 0.0, 1.1)
        with pytest.raises(ValueError):
            bvn_cdf(float("nan"), 0.0, 0.5)

    def test_vector_broadcast(self, rng):
        h = rng.uniform(-3, 3, (4, 5))
        k = rng.uniform(-3, 3, 5)
        rho = rng.uniform(-0.9, 0.9)
        out = bvn_cdf(h, k, rho)
        assert out.shape == (4, 5)
        assert out[2, 3] == pytest.approx(bvn_cdf(h[2, 3], k[3], rho), abs=0)

    @pytest.mark.skipif(not gaussians._HAVE_NUMBA, reason="numba not installed")
    def test_compiled_kernel_matches_reference(self, rng):
        h = rng.uniform(-8, 8, 5000)
        k = rng.uniform(-8, 8, 5000)
        rho = rng.uniform(-0.9999, 0.9999, 5000)
        fast = bvn_cdf(h, k, rho)
        slow = gaussians._bvn_finite(h, k, rho)
        assert np.abs(fast - slow).max() <= 1e-14
