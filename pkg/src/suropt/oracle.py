"""Brute-force Monte-Carlo estimators for every closed form in the package.

These estimators exist so the closed-form probability calculus and the
expected-excursion-volume criteria can be checked against straight
simulation: draw the hypothetical observation, condition the model on it
with the one-point update formulas, recompute the quantity of interest
exactly (including re-extracting the Pareto front per draw), and average.
They are never used in the optimization path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .criteria import IntegrationGrid
from .gp import DUPLICATE_VARIANCE_FRACTION, GPPosterior, update_moments
from .pairprob import DEGENERATE_SD_FRACTION, standardize
from .pareto import _nd_probability_from_moments, build_tessellation, extract_front

__all__ = ["OracleEstimate", "mc_pair_expectations", "mc_eev"]

_CHUNK = 20_000


@dataclass(frozen=True)
class OracleEstimate:
    """Simulation mean with its standard error; reproducible per seed."""

    mean: float
    std_error: float
    n_draws: int
    seed: int

    def brackets(self, value: float, n_se: float = 3.0) -> bool:
        """Whether ``value`` lies within ``n_se`` standard errors of the mean."""
        return abs(value - self.mean) <= n_se * max(self.std_error, 1e-300)


def _estimate(samples: np.ndarray, n_draws: int, seed: int) -> OracleEstimate:
    se = float(samples.std(ddof=1) / np.sqrt(len(samples))) if len(samples) > 1 else 0.0
    return OracleEstimate(float(samples.mean()), se, n_draws, seed)


def mc_pair_expectations(post: GPPosterior, x, x_plus, a: float, b: float,
                         n_draws: int, seed: int):
    """Simulation estimates of the three pair expectations (q, r, h).

    Draws the candidate's value directly in standardized form, conditions the
    target's law on it through the update formulas, and averages the future
    probabilities restricted to the draw falling below / above ``b``.
    """
    if n_draws < 1_000:
        raise ValueError("pair-expectation oracle needs at least 1000 draws")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x_plus = np.atleast_1d(np.asarray(x_plus, dtype=float))
    mean_p, var_p = post.predict(x_plus)
    sd_p = np.sqrt(max(var_p, 0.0))
    scale = np.sqrt(post.kernel.variance)

    if sd_p < DEGENERATE_SD_FRACTION * scale:
        # Deterministic candidate: one exact evaluation, zero spread.
        mean_x, var_x = post.predict(x)
        sd_x = np.sqrt(max(var_x, 0.0))
        det_x = sd_x < DEGENERATE_SD_FRACTION * scale
        p_a = float(ndtr(standardize(a, mean_x, sd_x, det_x)))
        p_y = float(ndtr(standardize(mean_p, mean_x, sd_x, det_x)))
        below = mean_p <= b
        q = OracleEstimate(p_a if below else 0.0, 0.0, n_draws, seed)
        r = OracleEstimate(0.0 if below else p_a, 0.0, n_draws, seed)
        h = OracleEstimate(p_y if below else 0.0, 0.0, n_draws, seed)
        return q, r, h

    u = np.random.default_rng(seed).standard_normal(n_draws)
    y_plus = mean_p + sd_p * u
    mean_new, var_new = update_moments(post, x_plus, y_plus, x)
    mean_new = mean_new[:, 0]
    sd_new = np.sqrt(max(float(var_new[0]), 0.0))
    det_new = sd_new < DEGENERATE_SD_FRACTION * scale
    p_a = ndtr(standardize(a, mean_new, sd_new, det_new))
    p_y = ndtr(standardize(y_plus, mean_new, sd_new, det_new))
    below = y_plus <= b
    return (_estimate(p_a * below, n_draws, seed),
            _estimate(p_a * ~below, n_draws, seed),
            _estimate(p_y * below, n_draws, seed))


def mc_eev(posts: Sequence[GPPosterior], grid: IntegrationGrid, archive,
           x_plus, n_draws: int, seed: int) -> OracleEstimate:
    """Simulation estimate of the expected excursion volume after observing
    ``x_plus``.

    Single objective: per draw, the volume below ``min(y_min, y+)`` under the
    updated moments.  Several objectives: per draw, the front is re-extracted
    from the archive plus the drawn vector, its tessellation rebuilt, and the
    non-dominated volume recomputed under the updated moments.
    """
    if n_draws < 1_000:
        raise ValueError("excursion-volume oracle needs at least 1000 draws")
    archive = np.asarray(archive, dtype=float)
    if archive.ndim == 1:
        archive = archive[:, None]
    q = len(posts)
    if archive.shape[1] != q:
        raise ValueError("archive must have one column per objective")
    x_plus = np.atleast_1d(np.asarray(x_plus, dtype=float))

    degenerate = True
    cand_mean, cand_sd = np.empty(q), np.empty(q)
    for k, post in enumerate(posts):
        m, v = post.predict(x_plus)
        cand_mean[k], cand_sd[k] = m, np.sqrt(max(v, 0.0))
        if v >= DUPLICATE_VARIANCE_FRACTION * post.kernel.variance:
            degenerate = False

    if q == 1:
        return _mc_eev_single(posts[0], grid, float(archive.min()), x_plus,
                              cand_mean[0], cand_sd[0], degenerate, n_draws, seed)
    return _mc_eev_multi(posts, grid, archive, x_plus, cand_mean, cand_sd,
                         degenerate, n_draws, seed)


def _mc_eev_single(post, grid, y_min, x_plus, cand_mean, cand_sd, degenerate,
                   n_draws, seed):
    scale = np.sqrt(post.kernel.variance)
    if degenerate:
        batch = post.batch(grid.points)
        det = batch.sd < DEGENERATE_SD_FRACTION * scale
        thresh = min(y_min, cand_mean)
        ev = float(grid.weights @ ndtr(standardize(thresh, batch.mean, batch.sd, det)))
        return OracleEstimate(ev, 0.0, n_draws, seed)

    rng = np.random.default_rng(seed)
    y_plus = cand_mean + cand_sd * rng.standard_normal(n_draws)
    evs = np.empty(n_draws)
    sd_new = None
    for start in range(0, n_draws, _CHUNK):
        ys = y_plus[start:start + _CHUNK]
        mean_new, var_new = update_moments(post, x_plus, ys, grid.points)
        if sd_new is None:
            sd_new = np.sqrt(np.maximum(var_new, 0.0))
            det_new = sd_new < DEGENERATE_SD_FRACTION * scale
        thresh = np.minimum(y_min, ys)[:, None]
        z = standardize(thresh, mean_new, sd_new[None, :], det_new[None, :])
        evs[start:start + len(ys)] = ndtr(z) @ grid.weights
    return _estimate(evs, n_draws, seed)


def _mc_eev_multi(posts, grid, archive, x_plus, cand_mean, cand_sd, degenerate,
                  n_draws, seed):
    q = len(posts)
    if degenerate:
        tess = build_tessellation(extract_front(archive))
        means, sds, variances = [], [], []
        for post in posts:
            b = post.batch(grid.points)
            means.append(b.mean)
            sds.append(b.sd)
            variances.append(post.kernel.variance)
        ev = float(grid.weights @ _nd_probability_from_moments(
            np.array(means), np.array(sds), tess, variances))
        return OracleEstimate(ev, 0.0, n_draws, seed)

    # Per-objective update ingredients; the posterior spread never depends on
    # the drawn value, only the mean shifts.
    base_mean, new_sd, gain, variances = [], [], [], []
    for k, post in enumerate(posts):
        batch = post.batch(grid.points)
        cand = post.batch(x_plus[None, :])
        cov = post.cross_cov(batch, cand)[:, 0]
        g = cov / (float(cand.var[0]) + post.nugget)
        base_mean.append(batch.mean)
        gain.append(g)
        new_sd.append(np.sqrt(np.maximum(batch.var - cov * g, 0.0)))
        variances.append(post.kernel.variance)
    base_mean = np.array(base_mean)       # (q, L)
    new_sd = np.array(new_sd)
    gain = np.array(gain)

    rng = np.random.default_rng(seed)
    draws = cand_mean[None, :] + cand_sd[None, :] * rng.standard_normal((n_draws, q))
    evs = np.empty(n_draws)
    arch_idx = np.arange(len(archive) + 1)
    for i in range(n_draws):
        y_new = draws[i]
        front = extract_front(np.vstack([archive, y_new[None, :]]))
        tess = build_tessellation(front)
        means = base_mean + gain * (y_new - cand_mean)[:, None]
        probs = _nd_probability_from_moments(means, new_sd, tess, variances)
        evs[i] = grid.weights @ probs
    return _estimate(evs, n_draws, seed)
