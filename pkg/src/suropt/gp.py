"""Universal-kriging Gaussian-process emulator.

A fitted :class:`GPPosterior` caches a Cholesky factor of the regularized
covariance matrix together with the generalized-least-squares trend solve, so
prediction, posterior covariance and path sampling are triangular solves.
The predictive variance includes the trend-uncertainty term of universal
kriging.  One-point update formulas are exposed as the pure function
:func:`update_moments`; :meth:`GPPosterior.update` itself refits on the
augmented design, which is cheap at the design sizes this package targets and
is required to agree with the formulas to 1e-6.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

__all__ = [
    "GPError",
    "ModelFitError",
    "DuplicatePointError",
    "KernelSpec",
    "TrendBasis",
    "Design",
    "GPPosterior",
    "HyperparameterBounds",
    "kernel_eval",
    "kernel_matrix",
    "fit",
    "update_moments",
    "estimate_hyperparameters",
    "sample_paths",
]

# Diagonal regularization: start at 1e-10 * variance, escalate x10 on
# factorization failure up to 1e-4 * variance.
NUGGET_START = 1e-10
NUGGET_MAX = 1e-4
# New observations with predictive variance below this fraction of the
# process variance are treated as duplicates of an existing design point.
DUPLICATE_VARIANCE_FRACTION = 1e-9
# Largest grid admitted to dense path sampling (Cholesky feasibility guard).
MAX_SAMPLE_GRID = 4096

_SQRT3 = math.sqrt(3.0)
_SQRT5 = math.sqrt(5.0)


class GPError(RuntimeError):
    """Base class for emulator failures."""


class ModelFitError(GPError):
    """Covariance factorization failed even at the maximum nugget."""


class DuplicatePointError(GPError):
    """Attempted to condition on a point already determined by the design."""


@dataclass(frozen=True)
class KernelSpec:
    """Stationary covariance kernel: family, process variance, length-scales."""

    family: str
    variance: float
    ranges: tuple[float, ...]

    _FAMILIES = ("matern32", "matern52", "squared_exponential")

    def __post_init__(self):
        if self.family not in self._FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; expected one of {self._FAMILIES}")
        object.__setattr__(self, "ranges", tuple(float(r) for r in np.atleast_1d(self.ranges)))
        object.__setattr__(self, "variance", float(self.variance))
        if not self.variance > 0.0:
            raise ValueError("kernel variance must be positive")
        if not all(r > 0.0 for r in self.ranges):
            raise ValueError("kernel ranges must all be positive")

    @property
    def dim(self) -> int:
        return len(self.ranges)


def _correlation_from_scaled_distance(family: str, r: np.ndarray) -> np.ndarray:
    if family == "matern32":
        t = _SQRT3 * r
        return (1.0 + t) * np.exp(-t)
    if family == "matern52":
        t = _SQRT5 * r
        return (1.0 + t + t * t / 3.0) * np.exp(-t)
    # squared_exponential
    return np.exp(-0.5 * r * r)


def kernel_matrix(spec: KernelSpec, X: np.ndarray, X2: np.ndarray | None = None) -> np.ndarray:
    """Covariance matrix k(X, X2) under ``spec`` (anisotropic distances)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != spec.dim:
        raise ValueError(f"points have dimension {X.shape[1]}, kernel expects {spec.dim}")
    ranges = np.asarray(spec.ranges, dtype=float)
    Xs = X / ranges
    if X2 is None:
        r = cdist(Xs, Xs)
    else:
        X2 = np.atleast_2d(np.asarray(X2, dtype=float))
        if X2.shape[1] != spec.dim:
            raise ValueError(f"points have dimension {X2.shape[1]}, kernel expects {spec.dim}")
        r = cdist(Xs, X2 / ranges)
    return spec.variance * _correlation_from_scaled_distance(spec.family, r)


def kernel_eval(spec: KernelSpec, x, x2) -> float:
    """Scalar kernel value between two points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x.shape != x2.shape or x.size != spec.dim:
        raise ValueError("kernel_eval arguments must both have the kernel's dimension")
    return float(kernel_matrix(spec, x[None, :], x2[None, :])[0, 0])


def _constant_basis(X: np.ndarray) -> np.ndarray:
    return np.ones(len(X))


@dataclass(frozen=True)
class TrendBasis:
    """Ordered trend functions; each maps an (n, d) array to an (n,) column."""

    functions: tuple[Callable[[np.ndarray], np.ndarray], ...] = (_constant_basis,)

    def __post_init__(self):
        if len(self.functions) < 1:
            raise ValueError("trend basis needs at least one function")

    @classmethod
    def constant(cls) -> "TrendBasis":
        return cls()

    @property
    def size(self) -> int:
        return len(self.functions)

    def design_matrix(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        cols = [np.asarray(f(X), dtype=float).reshape(len(X)) for f in self.functions]
        return np.column_stack(cols)


@dataclass(frozen=True)
class Design:
    """Observed design: locations and response values."""

    points: np.ndarray
    observations: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        obs = np.asarray(self.observations, dtype=float).reshape(-1)
        if len(pts) != len(obs):
            raise ValueError("points and observations must have matching lengths")
        if len(pts) == 0:
            raise ValueError("design must contain at least one observation")
        if len(np.unique(pts, axis=0)) != len(pts):
            raise ValueError("design contains duplicate points")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "observations", obs)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def augmented(self, x_new, y_new: float) -> "Design":
        x_new = np.atleast_1d(np.asarray(x_new, dtype=float))
        return Design(np.vstack([self.points, x_new[None, :]]),
                      np.append(self.observations, float(y_new)))


@dataclass
class BatchPrediction:
    """Predictive moments at a fixed point set, with the solve products
    needed to get posterior covariances against further points cheaply."""

    points: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    sd: np.ndarray
    _v: np.ndarray  # L^-1 k_n(points), shape (n, L)
    _w: np.ndarray  # G^-1 (f(points) - F' K^-1 k_n(points)), shape (p, L)


@dataclass
class GPPosterior:
    """Kriging model conditioned on a design; immutable after construction."""

    design: Design
    kernel: KernelSpec
    trend: TrendBasis
    nugget: float
    beta_hat: np.ndarray
    _chol: np.ndarray = field(repr=False)          # lower Cholesky of K_n + nugget I
    _alpha: np.ndarray = field(repr=False)         # K_n^-1 (y - F beta_hat)
    _half_f: np.ndarray = field(repr=False)        # L^-1 F, shape (n, p)
    _chol_gls: np.ndarray = field(repr=False)      # lower Cholesky of F' K^-1 F

    @property
    def n(self) -> int:
        return self.design.n

    @property
    def dim(self) -> int:
        return self.design.dim

    # -- prediction ---------------------------------------------------------

    def batch(self, X) -> BatchPrediction:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        ks = kernel_matrix(self.kernel, self.design.points, X)          # (n, L)
        v = solve_triangular(self._chol, ks, lower=True)                # (n, L)
        f = self.trend.design_matrix(X)                                 # (L, p)
        u = f.T - self._half_f.T @ v                                    # (p, L)
        w = solve_triangular(self._chol_gls, u, lower=True)             # (p, L)
        mean = f @ self.beta_hat + ks.T @ self._alpha
        var = self.kernel.variance - np.einsum("ij,ij->j", v, v) + np.einsum("ij,ij->j", w, w)
        var = np.maximum(var, 0.0)
        return BatchPrediction(X, mean, var, np.sqrt(var), v, w)

    def predict(self, x):
        """Predictive mean and variance; scalars for a single point."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        b = self.batch(x[None, :] if single else x)
        if single:
            return float(b.mean[0]), float(b.var[0])
        return b.mean, b.var

    def posterior_cov(self, x, x2):
        """Posterior covariance c_n; scalar for single points, else the
        (len(x), len(x2)) cross-covariance matrix."""
        x = np.asarray(x, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        single = x.ndim == 1 and x2.ndim == 1
        a = self.batch(x[None, :] if x.ndim == 1 else x)
        b = self.batch(x2[None, :] if x2.ndim == 1 else x2)
        cov = self.cross_cov(a, b)
        return float(cov[0, 0]) if single else cov

    def cross_cov(self, a: BatchPrediction, b: BatchPrediction) -> np.ndarray:
        prior = kernel_matrix(self.kernel, a.points, b.points)
        return prior - a._v.T @ b._v + a._w.T @ b._w

    # -- conditioning -------------------------------------------------------

    def update(self, x_new, y_new: float) -> "GPPosterior":
        """Posterior conditioned on one more observation.

        Refits on the augmented design (numerically safest); rejected if the
        point is already determined by the current design.
        """
        x_new = np.atleast_1d(np.asarray(x_new, dtype=float))
        _, var = self.predict(x_new)
        if var < DUPLICATE_VARIANCE_FRACTION * self.kernel.variance:
            raise DuplicatePointError(
                f"point {x_new} has predictive variance {var:.3e}; already determined by the design")
        return fit(self.design.augmented(x_new, y_new), self.kernel, self.trend)


def fit(design: Design, kernel: KernelSpec, trend: TrendBasis | None = None) -> GPPosterior:
    """Fit a universal-kriging posterior with nugget-escalating factorization."""
    trend = trend or TrendBasis.constant()
    if design.dim != kernel.dim:
        raise ValueError(f"design dimension {design.dim} != kernel dimension {kernel.dim}")
    F = trend.design_matrix(design.points)
    n, p = F.shape
    if n < p:
        raise ModelFitError(f"need at least p={p} observations for the trend, got n={n}")

    K = kernel_matrix(kernel, design.points)
    nugget = NUGGET_START
    chol = None
    while nugget <= NUGGET_MAX * (1.0 + 1e-12):
        try:
            chol = cholesky(K + nugget * kernel.variance * np.eye(n), lower=True)
            break
        except np.linalg.LinAlgError:
            nugget *= 10.0
    if chol is None:
        raise ModelFitError("covariance factorization failed at the maximum nugget")

    half_f = solve_triangular(chol, F, lower=True)
    half_y = solve_triangular(chol, design.observations, lower=True)
    try:
        chol_gls = cholesky(half_f.T @ half_f, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ModelFitError("trend design matrix is rank deficient") from exc
    beta = solve_triangular(chol_gls.T,
                            solve_triangular(chol_gls, half_f.T @ half_y, lower=True))
    resid = design.observations - F @ beta
    alpha = solve_triangular(chol.T, solve_triangular(chol, resid, lower=True))
    return GPPosterior(design, kernel, trend, nugget * kernel.variance,
                       beta, chol, alpha, half_f, chol_gls)


def update_moments(post: GPPosterior, x_new, y_new, x):
    """One-point updated predictive moments, in closed form.

    ``m_{n+1}(x) = m_n(x) + c_n(x, x_new) / s_n^2(x_new) * (y_new - m_n(x_new))``
    ``s_{n+1}^2(x) = s_n^2(x) - c_n(x, x_new)^2 / s_n^2(x_new)``

    The denominator carries the model's nugget so the formulas agree with a
    full refit (which regularizes the new diagonal entry) to machine
    precision even for nearly determined update points.

    ``y_new`` may be a scalar or a 1-D array of hypothetical values; the
    returned mean then has shape ``(len(y_new), len(x))``.  The variance never
    depends on ``y_new``.
    """
    x = np.asarray(x, dtype=float)
    single_x = x.ndim == 1
    X = x[None, :] if single_x else x
    x_new = np.atleast_1d(np.asarray(x_new, dtype=float))

    b = post.batch(X)
    bn = post.batch(x_new[None, :])
    s2_new = float(bn.var[0]) + post.nugget
    if s2_new <= 0.0:
        raise DuplicatePointError("update point has zero predictive variance")
    c = post.cross_cov(b, bn)[:, 0]
    gain = c / s2_new

    y_new_arr = np.asarray(y_new, dtype=float)
    shift = y_new_arr - float(bn.mean[0])
    if y_new_arr.ndim == 0:
        mean = b.mean + gain * float(shift)
    else:
        mean = b.mean[None, :] + shift[:, None] * gain[None, :]
    var = np.maximum(b.var - c * c / s2_new, 0.0)
    if single_x and y_new_arr.ndim == 0:
        return float(mean[0]), float(var[0])
    return mean, var


@dataclass(frozen=True)
class HyperparameterBounds:
    """Box constraints for maximum-likelihood search."""

    variance: tuple[float, float]
    ranges: tuple[tuple[float, float], ...]

    @classmethod
    def from_design(cls, design: Design) -> "HyperparameterBounds":
        y_scale = max(float(np.var(design.observations)), 1e-30)
        widths = design.points.max(axis=0) - design.points.min(axis=0)
        widths = np.where(widths > 0.0, widths, 1.0)
        return cls(variance=(1e-3 * y_scale, 1e3 * y_scale),
                   ranges=tuple((1e-2 * w, 10.0 * w) for w in widths))


def _concentrated_neg_log_likelihood(log_ranges, design, family, F, var_bounds):
    """-2 log L with the variance profiled out analytically (then clamped)."""
    spec = KernelSpec(family, 1.0, tuple(np.exp(log_ranges)))
    n = design.n
    R = kernel_matrix(spec, design.points)
    nugget = NUGGET_START
    chol = None
    while nugget <= NUGGET_MAX * (1.0 + 1e-12):
        try:
            chol = cholesky(R + nugget * np.eye(n), lower=True)
            break
        except np.linalg.LinAlgError:
            nugget *= 10.0
    if chol is None:
        return np.inf, np.nan
    half_f = solve_triangular(chol, F, lower=True)
    half_y = solve_triangular(chol, design.observations, lower=True)
    gram = half_f.T @ half_f
    try:
        chol_gls = cholesky(gram, lower=True)
    except np.linalg.LinAlgError:
        return np.inf, np.nan
    beta = solve_triangular(chol_gls.T, solve_triangular(chol_gls, half_f.T @ half_y, lower=True))
    resid = half_y - half_f @ beta
    rss = float(resid @ resid)
    sigma2 = min(max(rss / n, var_bounds[0]), var_bounds[1])
    log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
    nll = n * math.log(sigma2) + rss / sigma2 + log_det
    return nll, sigma2


def estimate_hyperparameters(design: Design,
                             family: str,
                             trend: TrendBasis | None = None,
                             bounds: HyperparameterBounds | None = None,
                             n_starts: int = 5,
                             max_evals: int = 200,
                             seed: int = 0) -> KernelSpec:
    """Maximum-likelihood kernel estimation by multi-start local search.

    The concentrated log-likelihood is maximized over the length-scales with
    a derivative-free simplex search (``max_evals`` evaluations per start,
    ``n_starts`` log-uniform starts within the bounds); the process variance
    is profiled out analytically at each step and clamped to its bounds.
    Deterministic given ``seed``.  If every start fails, the bound midpoints
    are returned with a warning.
    """
    trend = trend or TrendBasis.constant()
    F = trend.design_matrix(design.points)
    if design.n < F.shape[1] + 2:
        raise ModelFitError("need at least p + 2 observations to estimate hyperparameters")
    bounds = bounds or HyperparameterBounds.from_design(design)
    lo = np.log([b[0] for b in bounds.ranges])
    hi = np.log([b[1] for b in bounds.ranges])
    if np.allclose(lo, hi) and math.isclose(bounds.variance[0], bounds.variance[1]):
        return KernelSpec(family, bounds.variance[0], tuple(np.exp(lo)))

    rng = np.random.default_rng(seed)
    starts = [0.5 * (lo + hi)]
    starts += [rng.uniform(lo, hi) for _ in range(max(0, n_starts - 1))]

    def objective(theta):
        theta = np.clip(theta, lo, hi)
        return _concentrated_neg_log_likelihood(theta, design, family, F, bounds.variance)[0]

    best = None
    for start in starts:
        try:
            res = minimize(objective, start, method="Nelder-Mead",
                           options={"maxfev": max_evals, "xatol": 1e-4, "fatol": 1e-8})
        except Exception:
            continue
        if not np.isfinite(res.fun):
            continue
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        warnings.warn("all likelihood searches failed; returning bound midpoints", RuntimeWarning)
        mid = 0.5 * (lo + hi)
        return KernelSpec(family, math.sqrt(bounds.variance[0] * bounds.variance[1]),
                          tuple(np.exp(mid)))
    theta = np.clip(best.x, lo, hi)
    _, sigma2 = _concentrated_neg_log_likelihood(theta, design, family, F, bounds.variance)
    return KernelSpec(family, sigma2, tuple(np.exp(theta)))


def sample_paths(kernel: KernelSpec, grid, n_paths: int, seed: int) -> np.ndarray:
    """Draw zero-mean process realizations on a finite grid.

    Returns an ``(n_paths, len(grid))`` array; row ``i`` is one realization.
    Reproducible per seed.
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if len(grid) > MAX_SAMPLE_GRID:
        raise ValueError(f"grid size {len(grid)} exceeds dense-sampling guard {MAX_SAMPLE_GRID}")
    K = kernel_matrix(kernel, grid)
    nugget = NUGGET_START
    chol = None
    while nugget <= NUGGET_MAX * (1.0 + 1e-12):
        try:
            chol = cholesky(K + nugget * kernel.variance * np.eye(len(grid)), lower=True)
            break
        except np.linalg.LinAlgError:
            nugget *= 10.0
    if chol is None:
        raise ModelFitError("covariance factorization failed at the maximum nugget")
    z = np.random.default_rng(seed).standard_normal((len(grid), n_paths))
    return (chol @ z).T
