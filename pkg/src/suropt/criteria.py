"""Sampling criteria: expected excursion volumes and expected improvement.

The acquisition value of a candidate ``x+`` is the expected volume, after
hypothetically observing ``x+``, of the region whose responses may still
beat the incumbent solutions (the excursion volume).  Expectations over the
unknown observation reduce to bivariate-normal CDFs through the pair
calculus in :mod:`suropt.pairprob`; integration over the design domain uses
a fixed weighted point set.

Three evaluation paths are provided:

* :func:`eev_single` — one objective, threshold at the current minimum.
* :func:`eev_multi` — any number of objectives, summing the per-cell joint
  probabilities over the full tessellation.  This is the defining form.
* :func:`eev_multi_fast2d` — two objectives, collapsing the cell sums into
  at most ``m + 1`` staircase terms per integration point.  Algebraically
  identical to :func:`eev_multi` and required to match it to 1e-9.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .gaussians import bvn_cdf, norm_cdf, norm_pdf
from .gp import DUPLICATE_VARIANCE_FRACTION, BatchPrediction, GPPosterior
from .pairprob import PairGeometry, geometry_from_moments, h_prob, r_prob
from .pareto import ParetoState, Tessellation, excursion_volume, excursion_volume_single

__all__ = ["IntegrationGrid", "SingleObjectiveState", "CriterionValue",
           "expected_improvement", "eev_single", "pair_cell_terms", "p_ij",
           "eev_multi", "eev_multi_fast2d"]


@dataclass
class IntegrationGrid:
    """Fixed integration points and normalized weights over the design domain.

    Per-posterior predictive moments at the points are computed once and
    memoized, since criterion evaluation sweeps many candidates against the
    same grid within one iteration.
    """

    points: np.ndarray
    weights: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(self.points) != len(self.weights):
            raise ValueError("points and weights must have equal lengths")
        if np.any(self.weights < 0.0):
            raise ValueError("integration weights must be nonnegative")
        total = self.weights.sum()
        if not np.isclose(total, 1.0):
            raise ValueError("integration weights must sum to 1")

    @classmethod
    def sobol(cls, dim: int, size: int) -> "IntegrationGrid":
        """Equal-weight Sobol point set on the unit cube (first point included)."""
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            pts = qmc.Sobol(d=dim, scramble=False).random(size)
        return cls(pts, np.full(size, 1.0 / size))

    @classmethod
    def default_size(cls, dim: int) -> int:
        return 1000 if dim <= 2 else 2000

    @property
    def size(self) -> int:
        return len(self.points)

    def prediction(self, post: GPPosterior) -> BatchPrediction:
        return self.memo(("batch", id(post)), (post,), lambda: post.batch(self.points))

    def memo(self, key, anchors: tuple, builder):
        """Cache ``builder()`` under ``key`` for as long as every anchor object
        is alive and identical.

        Criterion evaluation sweeps hundreds of candidates against the same
        posteriors and front within one iteration; everything that does not
        depend on the candidate is computed once here.
        """
        hit = self._cache.get(key)
        if hit is not None and len(hit[0]) == len(anchors) \
                and all(a is b for a, b in zip(hit[0], anchors)):
            return hit[1]
        value = builder()
        self._cache[key] = (anchors, value)
        return value


@dataclass(frozen=True)
class SingleObjectiveState:
    """Current single-objective incumbent and its model."""

    posterior: GPPosterior
    y_min: float


@dataclass(frozen=True)
class CriterionValue:
    """Expected future excursion volume and its reduction from the current one."""

    eev: float
    reduction: float

    @property
    def current_volume(self) -> float:
        return self.eev + self.reduction


def _grid_geometry(grid: IntegrationGrid, post: GPPosterior, x_plus) -> PairGeometry:
    """Pair coefficients between every grid point and the candidate."""
    x_plus = np.atleast_1d(np.asarray(x_plus, dtype=float))
    batch = grid.prediction(post)
    cand = post.batch(x_plus[None, :])
    cov = post.cross_cov(batch, cand)[:, 0]
    return geometry_from_moments(batch.mean, batch.sd, float(cand.mean[0]),
                                 float(cand.sd[0]), cov, post.kernel.variance)


# ---------------------------------------------------------------------------
# expected improvement (baseline criterion)
# ---------------------------------------------------------------------------

def expected_improvement(state: SingleObjectiveState, x):
    """E[max(0, y_min - Y(x))]; zero wherever the prediction is deterministic."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    mean, var = state.posterior.predict(x[None, :] if single else x)
    sd = np.sqrt(var)
    out = ei_value(state.y_min, mean, sd)
    return float(out[0]) if single else out


def ei_value(y_min, mean, sd):
    """Closed-form expected improvement from predictive moments."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    sd = np.atleast_1d(np.asarray(sd, dtype=float))
    out = np.zeros(np.broadcast_shapes(mean.shape, sd.shape))
    live = sd > 0.0
    u = (y_min - mean[live]) / sd[live]
    out[live] = sd[live] * (u * norm_cdf(u) + norm_pdf(u))
    # Deterministic predictions can still improve if already below y_min.
    out[~live] = np.maximum(y_min - mean[~live], 0.0)
    return out


# ---------------------------------------------------------------------------
# single-objective expected excursion volume
# ---------------------------------------------------------------------------

def eev_single(state: SingleObjectiveState, grid: IntegrationGrid, x_plus) -> CriterionValue:
    """Expected excursion volume below ``min(y_min, Y+)`` after observing ``x+``.

    A candidate already determined by the design carries no information and
    returns the current volume unchanged.
    """
    post = state.posterior
    ev_now = grid.memo(("ev_single", state.y_min), (post,),
                       lambda: excursion_volume_single(post, grid, state.y_min))
    geom = _grid_geometry(grid, post, x_plus)
    if geom.sd_plus ** 2 < DUPLICATE_VARIANCE_FRACTION * post.kernel.variance:
        return CriterionValue(ev_now, 0.0)
    link = geom.link(state.y_min, state.y_min)
    # integrand = h + r: expected volume below the new value when it lowers
    # the threshold, plus expected volume below y_min when it does not.
    eev = float(grid.weights @ (h_prob(link) + r_prob(link)))
    return CriterionValue(eev, ev_now - eev)


# ---------------------------------------------------------------------------
# multi-objective expected excursion volume — general cell path
# ---------------------------------------------------------------------------

def pair_cell_terms(geom: PairGeometry, interval_i, interval_j):
    """Per-objective joint masses for one (candidate cell, target cell) pair.

    ``interval_i`` bounds the candidate's response, ``interval_j`` the
    target's, both half-open ``[lo, hi)`` on the same objective.  Returns
    ``(b, d)`` where ``b`` is the joint probability of both landing in their
    intervals and ``d`` additionally requires the candidate's component to
    sit at-or-below the target's.
    """
    lo_i, hi_i = interval_i
    lo_j, hi_j = interval_j
    bar_lo, bar_hi = geom.bar(lo_i, strict=True), geom.bar(hi_i, strict=True)
    til_lo, til_hi = geom.tilde(lo_j, strict=True), geom.tilde(hi_j, strict=True)
    rho = geom.rho
    b = (bvn_cdf(bar_hi, til_hi, rho) - bvn_cdf(bar_hi, til_lo, rho)
         - bvn_cdf(bar_lo, til_hi, rho) + bvn_cdf(bar_lo, til_lo, rho))
    b = np.clip(b, 0.0, 1.0)
    if lo_i >= hi_j:        # candidate interval entirely above: never dominated
        d = np.zeros_like(b)
    elif hi_i <= lo_j:      # candidate interval entirely below: always dominated
        d = b.copy()
    elif lo_i == lo_j and hi_i == hi_j:     # shared interval
        h_hi = _h_at(geom, bar_hi)
        h_lo = _h_at(geom, bar_lo)
        d = bvn_cdf(bar_hi, til_hi, rho) - h_hi + h_lo - bvn_cdf(bar_lo, til_hi, rho)
        d = np.clip(d, 0.0, np.maximum(b, 0.0))
    else:
        raise RuntimeError(
            f"cell intervals {interval_i} and {interval_j} overlap without being "
            "equal; cells must come from one tessellation")
    if np.ndim(b) == 0 or (np.ndim(geom.rho) == 0 and b.size == 1):
        return float(np.asarray(b).reshape(())), float(np.asarray(d).reshape(()))
    return b, d


def _h_at(geom: PairGeometry, bar_value):
    """h evaluated at an already-standardized candidate threshold."""
    bar_value = np.asarray(bar_value, dtype=float)
    if geom.candidate_deterministic:
        return norm_cdf(bar_value) * norm_cdf(geom.eta)
    return np.where(geom.coincident, norm_cdf(bar_value),
                    bvn_cdf(bar_value, geom.eta, geom.nu))


def p_ij(posts: Sequence[GPPosterior], x, x_plus, cell_i, cell_j):
    """Joint probability that the target lands in ``cell_j`` undominated while
    the candidate's observation lands in ``cell_i``."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    b_prod, d_prod = 1.0, 1.0
    for k, post in enumerate(posts):
        bx = post.batch(X)
        bp = post.batch(np.atleast_2d(np.asarray(x_plus, dtype=float)))
        cov = post.cross_cov(bx, bp)[:, 0]
        geom = geometry_from_moments(bx.mean, bx.sd, float(bp.mean[0]),
                                     float(bp.sd[0]), cov, post.kernel.variance)
        b, d = pair_cell_terms(geom, (cell_i.lower[k], cell_i.upper[k]),
                               (cell_j.lower[k], cell_j.upper[k]))
        b_prod = b_prod * b
        d_prod = d_prod * d
    out = np.clip(b_prod - d_prod, 0.0, 1.0)
    if single:
        return float(np.asarray(out).reshape(-1)[0])
    return out


def _axis_tables(geom: PairGeometry, tildes: np.ndarray, breakpoints: np.ndarray):
    """Interval-pair tables for one objective.

    ``tildes`` are the pre-standardized target-side breakpoints, (m + 2, L).
    Returns ``(B, D)`` of shape (m + 1, m + 1, L): entry [u, v] is the joint
    mass of (candidate in interval u, target in interval v), without and with
    the domination condition on this component.
    """
    bars = np.atleast_1d(geom.bar(breakpoints, strict=True))                # (m+2,)
    L = tildes.shape[1]
    n_iv = len(breakpoints) - 1
    rho = np.broadcast_to(np.asarray(geom.rho, dtype=float), (L,))
    # Joint CDF at every (candidate bp, target bp) pair.
    qq = bvn_cdf(bars[:, None, None], tildes[None, :, :], rho[None, None, :])
    h = _h_at(geom, bars[:, None])                                          # (m+2, L)
    B = (qq[1:, 1:, :] - qq[1:, :-1, :] - qq[:-1, 1:, :] + qq[:-1, :-1, :])
    B = np.clip(B, 0.0, 1.0)
    D = np.zeros_like(B)
    iu = np.arange(n_iv)
    # candidate interval strictly below target interval: always dominated
    below = iu[:, None] < iu[None, :]
    D[below] = B[below]
    # shared interval: subtract the stay-above mass through h
    d_diag = qq[iu + 1, iu + 1, :] - h[iu + 1] + h[iu] - qq[iu, iu + 1, :]
    D[iu, iu, :] = np.clip(d_diag, 0.0, B[iu, iu, :])
    return B, D


def eev_multi(posts: Sequence[GPPosterior], grid: IntegrationGrid,
              tess: Tessellation, x_plus) -> CriterionValue:
    """Expected excursion volume behind the front after observing ``x+``.

    Sums, over every cell the new observation may land in and every currently
    non-dominated cell the target may land in, the joint probability that the
    target stays undominated.  The sum over the observation's cells runs over
    the full product set, so it factorizes per objective; the result is
    numerically identical to the naive double cell sum.
    """
    ev_now = grid.memo(("ev_multi", id(tess)), (tess, *posts),
                       lambda: excursion_volume(posts, grid, tess))
    geoms = [_grid_geometry(grid, post, x_plus) for post in posts]
    if all(g.sd_plus ** 2 < DUPLICATE_VARIANCE_FRACTION * p.kernel.variance
           for g, p in zip(geoms, posts)):
        return CriterionValue(ev_now, 0.0)
    q = len(posts)
    sum_b, sum_d = [], []
    for k in range(q):
        tildes = grid.memo(("tildes", k, id(tess)), (tess, posts[k]),
                           lambda: _target_breakpoints(geoms[k], tess.breakpoints[k]))
        B, D = _axis_tables(geoms[k], tildes, tess.breakpoints[k])
        sum_b.append(B.sum(axis=0))     # (m + 1, L)
        sum_d.append(D.sum(axis=0))
    acc = np.zeros(grid.size)
    for idx in tess.nondominated_indices():
        prod_b = sum_b[0][idx[0]].copy()
        prod_d = sum_d[0][idx[0]].copy()
        for k in range(1, q):
            prod_b *= sum_b[k][idx[k]]
            prod_d *= sum_d[k][idx[k]]
        acc += np.maximum(prod_b - prod_d, 0.0)
    total = float(grid.weights @ acc)
    return CriterionValue(total, ev_now - total)


def _target_breakpoints(geom: PairGeometry, breakpoints: np.ndarray) -> np.ndarray:
    """Standardized target-side breakpoints, (m + 2, L); candidate-independent."""
    return np.atleast_2d(geom.tilde(breakpoints[:, None], strict=True))


# ---------------------------------------------------------------------------
# multi-objective expected excursion volume — two-objective staircase path
# ---------------------------------------------------------------------------

def eev_multi_fast2d(posts: Sequence[GPPosterior], grid: IntegrationGrid,
                     pareto: ParetoState, x_plus) -> CriterionValue:
    """Two-objective criterion via the ``m + 1`` maximal staircase columns.

    The non-dominated region of a bi-objective front sorted ascending in the
    first objective is the union of columns ``[y_j^(1), y_{j+1}^(1)) x
    (-inf, y_j^(2))`` for ``j = 0..m`` (with infinite padding).  Summing the
    cell terms of the general path over each column telescopes into four
    CDF evaluations per column; this function evaluates that reduced form.
    """
    if pareto.n_objectives != 2:
        raise ValueError("fast path requires exactly two objectives")
    # values sorted ascending in objective 1, descending in objective 2
    y1 = np.concatenate(([-np.inf], pareto.values[:, 0], [np.inf]))   # index 0..m+1
    y2 = np.concatenate(([np.inf], pareto.values[:, 1]))              # index 0..m

    geoms = [_grid_geometry(grid, post, x_plus) for post in posts]
    g1, g2 = geoms

    def _targets():
        t1 = _target_breakpoints(g1, y1)
        t2 = _target_breakpoints(g2, y2)
        c1 = norm_cdf(t1)                   # (m + 2, L)
        c2 = norm_cdf(t2)                   # (m + 1, L)
        # Current volume: sum over columns of (first-objective slab mass)
        # times (second-objective cap mass).
        slab = c1[1:, :] - c1[:-1, :]       # (m + 1, L)
        ev = float(grid.weights @ np.einsum("jl,jl->l", slab, c2))
        return t1, t2, ev

    t1, t2, ev_now = grid.memo(("stairs", id(pareto)), (pareto, *posts), _targets)
    if all(g.sd_plus ** 2 < DUPLICATE_VARIANCE_FRACTION * p.kernel.variance
           for g, p in zip(geoms, posts)):
        return CriterionValue(ev_now, 0.0)
    if g1.candidate_deterministic or g2.candidate_deterministic:
        # One objective observed but not the other (distinct designs); the
        # batched table below has no indicator branch, the cell path does.
        from .pareto import build_tessellation
        return eev_multi(posts, grid, build_tessellation(pareto), x_plus)

    b1 = np.atleast_1d(g1.bar(y1, strict=True))
    b2 = np.atleast_1d(g2.bar(y2, strict=True))
    # All four (diagonal joint CDF, h) tables in one batched evaluation.
    L = grid.size
    n1, n2 = len(b1), len(b2)
    bars = np.concatenate([b1, b1, b2, b2])[:, None]
    seconds = np.vstack([t1,
                         np.broadcast_to(np.atleast_1d(g1.eta), (n1, L)),
                         t2,
                         np.broadcast_to(np.atleast_1d(g2.eta), (n2, L))])
    corrs = np.vstack([np.broadcast_to(np.asarray(g1.rho, dtype=float), (n1, L)),
                       np.broadcast_to(np.asarray(g1.nu, dtype=float), (n1, L)),
                       np.broadcast_to(np.asarray(g2.rho, dtype=float), (n2, L)),
                       np.broadcast_to(np.asarray(g2.nu, dtype=float), (n2, L))])
    table = bvn_cdf(bars, seconds, corrs)
    qq1, h1 = table[:n1], table[n1:2 * n1]
    qq2, h2 = table[2 * n1:2 * n1 + n2], table[2 * n1 + n2:]
    coin1 = np.atleast_1d(g1.coincident)
    coin2 = np.atleast_1d(g2.coincident)
    if coin1.any():
        h1 = np.where(coin1[None, :], norm_cdf(b1)[:, None], h1)
    if coin2.any():
        h2 = np.where(coin2[None, :], norm_cdf(b2)[:, None], h2)

    # Column j loses the mass where the new observation beats the target on
    # both components: at-or-below within the same first-objective slab, and
    # at-or-below under the second-objective cap.
    slab_loss = (qq1[1:, :] - h1[1:, :]) - (qq1[:-1, :] - h1[:-1, :])  # (m + 1, L)
    cap_loss = qq2 - h2                                                # (m + 1, L)
    reduction_integrand = np.einsum("jl,jl->l", slab_loss, cap_loss)
    reduction = float(grid.weights @ reduction_integrand)
    eev = ev_now - reduction
    return CriterionValue(eev, reduction)
