"""Shared fixtures and independent oracles.

The dense-matrix kriging oracle below recomputes every posterior quantity
straight from the defining equations with explicit matrix inverses; it is
deliberately naive so the production Cholesky path is checked against an
independent evaluation route.
"""

import numpy as np
import pytest

from suropt import Design, KernelSpec, fit, kernel_matrix


class DenseKrigingOracle:
    """Universal-kriging moments via explicit inverses (reference path)."""

    def __init__(self, design: Design, spec: KernelSpec, nugget_fraction=1e-10):
        self.design = design
        self.spec = spec
        n = design.n
        self.K = kernel_matrix(spec, design.points) + nugget_fraction * spec.variance * np.eye(n)
        self.Ki = np.linalg.inv(self.K)
        self.F = np.ones((n, 1))
        gram = self.F.T @ self.Ki @ self.F
        self.gram_inv = np.linalg.inv(gram)
        self.beta = self.gram_inv @ self.F.T @ self.Ki @ design.observations
        self.resid = design.observations - self.F @ self.beta

    def mean(self, x):
        kx = kernel_matrix(self.spec, self.design.points, np.atleast_2d(x))[:, 0]
        return float(self.beta[0] + kx @ self.Ki @ self.resid)

    def cov(self, x, x2):
        kx = kernel_matrix(self.spec, self.design.points, np.atleast_2d(x))[:, 0]
        kx2 = kernel_matrix(self.spec, self.design.points, np.atleast_2d(x2))[:, 0]
        prior = kernel_matrix(self.spec, np.atleast_2d(x), np.atleast_2d(x2))[0, 0]
        u = 1.0 - self.F.T @ self.Ki @ kx
        u2 = 1.0 - self.F.T @ self.Ki @ kx2
        return float(prior - kx @ self.Ki @ kx2 + u @ self.gram_inv @ u2)

    def var(self, x):
        return max(self.cov(x, x), 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_model(rng, n=6, dim=1, family="matern52", variance=None, ranges=None):
    """One random kriging model on the unit cube."""
    variance = variance or float(rng.uniform(0.5, 2.0))
    ranges = ranges or tuple(rng.uniform(0.15, 0.6, size=dim))
    spec = KernelSpec(family, variance, ranges)
    pts = rng.uniform(0.0, 1.0, size=(n, dim))
    vals = np.sqrt(variance) * rng.standard_normal(n)
    return fit(Design(pts, vals), spec)


def random_biobjective(rng, n=6, dim=1):
    """Two independent models sharing a design, plus the observation archive."""
    pts = rng.uniform(0.0, 1.0, size=(n, dim))
    posts, cols = [], []
    for _ in range(2):
        spec = KernelSpec("matern32", float(rng.uniform(0.6, 1.5)),
                          tuple(rng.uniform(0.2, 0.5, size=dim)))
        vals = np.sqrt(spec.variance) * rng.standard_normal(n)
        posts.append(fit(Design(pts, vals), spec))
        cols.append(vals)
    return posts, np.column_stack(cols)
