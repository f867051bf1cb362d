"""Pareto-front quality indicators (minimization convention throughout)."""

from __future__ import annotations

import warnings

import numpy as np

from .pareto import ParetoState

__all__ = ["hypervolume", "epsilon_indicator", "r2_indicator", "simplex_weights"]


def _front_values(front) -> np.ndarray:
    if isinstance(front, ParetoState):
        return front.values
    vals = np.atleast_2d(np.asarray(front, dtype=float))
    if vals.size == 0:
        raise ValueError("empty front")
    return vals


def hypervolume(front, reference) -> float:
    """Area dominated by a bi-objective front and bounded by ``reference``.

    Points that do not dominate the reference contribute nothing and are
    dropped with a warning.  Computed by one sweep over the points sorted
    ascending in the first objective: each point spans a rectangle from its
    first objective to the next point's (or the reference), with height from
    the best second objective seen so far down to the reference.
    """
    vals = _front_values(front)
    reference = np.asarray(reference, dtype=float)
    if vals.shape[1] != 2 or reference.shape != (2,):
        raise ValueError("hypervolume supports exactly two objectives")
    inside = np.all(vals <= reference, axis=1)
    if not inside.all():
        warnings.warn(f"{np.count_nonzero(~inside)} front point(s) do not dominate "
                      "the reference point; excluded from the hypervolume")
    vals = vals[inside]
    if len(vals) == 0:
        return 0.0
    vals = vals[np.argsort(vals[:, 0], kind="stable")]
    best2 = np.minimum.accumulate(vals[:, 1])
    rights = np.append(vals[1:, 0], reference[0])
    widths = np.clip(rights - vals[:, 0], 0.0, None)
    return float(np.sum(widths * (reference[1] - best2)))


def epsilon_indicator(approx, truth) -> float:
    """Additive epsilon: the smallest uniform shift after which every truth
    point is weakly dominated by some shifted approximation point."""
    a = _front_values(approx)
    t = _front_values(truth)
    if a.shape[1] != t.shape[1]:
        raise ValueError("fronts must share the number of objectives")
    # eps = max over truth of min over approx of max over objectives (a - t)
    diff = a[:, None, :] - t[None, :, :]
    return float(diff.max(axis=2).min(axis=0).max())


def r2_indicator(approx, weights, utopian) -> float:
    """Mean over the weight set of the best weighted Tchebycheff utility
    reached by the front relative to the utopian point; lower is better."""
    a = _front_values(approx)
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    utopian = np.asarray(utopian, dtype=float)
    if np.any(weights < 0.0) or not np.allclose(weights.sum(axis=1), 1.0):
        raise ValueError("weights must be nonnegative and sum to one")
    util = np.max(weights[:, None, :] * np.abs(a[None, :, :] - utopian[None, None, :]),
                  axis=2)
    return float(util.min(axis=1).mean())


def simplex_weights(n: int = 101, q: int = 2) -> np.ndarray:
    """Uniformly spaced weight fan on the 2-simplex edge."""
    if q != 2:
        raise ValueError("only bi-objective weight fans are provided")
    t = np.linspace(0.0, 1.0, n)
    return np.column_stack([t, 1.0 - t])
