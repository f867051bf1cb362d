"""Domination, Pareto-front extraction, and the objective-space tessellation.

The objective space is cut into ``(m + 1)^q`` hyperrectangles whose bounds
are the sorted per-objective values of the current front padded with
``+-inf``.  Within one cell, domination by the current front is uniform, so
each cell carries a single dominated / non-dominated flag and the probability
that a point's (independent) objective responses land in any non-dominated
cell is a sum of products of univariate normal CDF differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .gaussians import norm_cdf
from .gp import GPPosterior
from .pairprob import DEGENERATE_SD_FRACTION, standardize

__all__ = ["dominates", "extract_front", "ParetoState", "Cell", "Tessellation",
           "build_tessellation", "cell_probability", "nondominated_probability",
           "excursion_volume", "excursion_volume_single"]

# Enumerating more cells than this is rejected outright.
MAX_CELLS = 1_000_000


def dominates(a, b) -> bool:
    """Weak domination: a is no worse than b in every objective."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"objective vectors have different lengths {a.shape} vs {b.shape}")
    return bool(np.all(a <= b))


@dataclass(frozen=True)
class ParetoState:
    """Mutually non-dominated objective vectors, sorted by the first objective.

    For two objectives this makes the first objective ascending and the
    second descending.  ``indices`` point back into the archive the front was
    extracted from (-1 when unknown).
    """

    values: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        vals = np.atleast_2d(np.asarray(self.values, dtype=float))
        idx = np.asarray(self.indices, dtype=int).reshape(-1)
        if len(vals) != len(idx):
            raise ValueError("values and indices must have equal lengths")
        if not np.all(np.isfinite(vals)):
            raise ValueError("objective values must be finite")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "indices", idx)

    @property
    def size(self) -> int:
        return len(self.values)

    @property
    def n_objectives(self) -> int:
        return self.values.shape[1]


def extract_front(points) -> ParetoState:
    """Non-dominated subset of an archive of objective vectors.

    Exact duplicates are kept once (first observed wins); any point weakly
    dominated by a distinct other is removed.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise ValueError("cannot extract a front from an empty archive")
    # Stable lexicographic order: a later point can only dominate an earlier
    # one if they are exact duplicates, so a single forward sweep suffices.
    order = np.lexsort(pts.T[::-1])
    kept_rows: list[np.ndarray] = []
    kept_idx: list[int] = []
    for i in order:
        p = pts[i]
        dominated = False
        for k in kept_rows:
            if np.all(k <= p):
                dominated = True
                break
        if not dominated:
            kept_rows.append(p)
            kept_idx.append(int(i))
    return ParetoState(np.array(kept_rows), np.array(kept_idx))


@dataclass(frozen=True)
class Cell:
    """One hyperrectangle of the tessellation (half-open on every axis)."""

    lower: np.ndarray
    upper: np.ndarray
    index: tuple[int, ...]
    dominated: bool


@dataclass(frozen=True)
class Tessellation:
    """All ``(m + 1)^q`` cells generated by a Pareto front."""

    front: ParetoState
    breakpoints: tuple[np.ndarray, ...]     # per objective, length m + 2 incl +-inf
    dominated: np.ndarray                   # bool, shape (m + 1,) * q

    @property
    def n_objectives(self) -> int:
        return len(self.breakpoints)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.dominated.shape

    @property
    def n_cells(self) -> int:
        return int(self.dominated.size)

    def cell(self, index: Sequence[int]) -> Cell:
        index = tuple(int(i) for i in index)
        lower = np.array([self.breakpoints[k][i] for k, i in enumerate(index)])
        upper = np.array([self.breakpoints[k][i + 1] for k, i in enumerate(index)])
        return Cell(lower, upper, index, bool(self.dominated[index]))

    def cells(self) -> Iterator[Cell]:
        for index in np.ndindex(self.shape):
            yield self.cell(index)

    def nondominated_indices(self) -> list[tuple[int, ...]]:
        return [tuple(int(v) for v in idx)
                for idx in np.argwhere(~self.dominated)]


def build_tessellation(front: ParetoState) -> Tessellation:
    """Tessellate objective space on the front's per-objective values.

    A cell is dominated iff some front point is at-or-below its lower corner
    in every objective.
    """
    m = front.size
    q = front.n_objectives
    if (m + 1) ** q > MAX_CELLS:
        raise ValueError(f"tessellation would have {(m + 1) ** q} cells (guard {MAX_CELLS})")
    breakpoints = tuple(
        np.concatenate(([-np.inf], np.sort(front.values[:, k]), [np.inf]))
        for k in range(q))
    shape = (m + 1,) * q
    dominated = np.zeros(shape, dtype=bool)
    for p in range(m):
        # le[k]: per axis, whether this front point's k-value is <= the cell's
        # lower bound; the outer AND over axes marks cells it dominates.
        le = [front.values[p, k] <= breakpoints[k][:-1] for k in range(q)]
        block = le[0]
        for k in range(1, q):
            block = np.multiply.outer(block, le[k])
        dominated |= block
    return Tessellation(front, breakpoints, dominated)


def _axis_cdf(mean, sd, breakpoints, variance):
    """CDF of one objective's predictive law at each breakpoint, as the mass
    strictly below (half-open cell convention); shape (L, m + 2)."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    sd = np.atleast_1d(np.asarray(sd, dtype=float))
    degenerate = sd < DEGENERATE_SD_FRACTION * np.sqrt(variance)
    z = standardize(breakpoints[None, :], mean[:, None], sd[:, None],
                    degenerate[:, None], strict=True)
    return norm_cdf(z)


def cell_probability(posts: Sequence[GPPosterior], x, cell: Cell) -> float:
    """Probability that the objective responses at ``x`` land in ``cell``."""
    x = np.asarray(x, dtype=float)
    prob = 1.0
    for k, post in enumerate(posts):
        mean, var = post.predict(x)
        cdf = _axis_cdf(mean, np.sqrt(max(var, 0.0)),
                        np.array([cell.lower[k], cell.upper[k]]), post.kernel.variance)
        prob *= float(cdf[0, 1] - cdf[0, 0])
    return max(prob, 0.0)


def _nd_probability_from_moments(means, sds, tess: Tessellation,
                                 variances) -> np.ndarray:
    """Probability of landing in any non-dominated cell, per target point.

    ``means``/``sds`` are (q, L) arrays of per-objective predictive moments.
    """
    q = tess.n_objectives
    L = np.atleast_2d(means).shape[1]
    cdfs = [_axis_cdf(means[k], sds[k], tess.breakpoints[k], variances[k])
            for k in range(q)]
    masses = [c[:, 1:] - c[:, :-1] for c in cdfs]   # (L, m + 1) per axis
    if q == 2:
        nd = (~tess.dominated).astype(float)
        return np.einsum("lu,uv,lv->l", masses[0], nd, masses[1])
    total = np.zeros(L)
    for idx in tess.nondominated_indices():
        term = masses[0][:, idx[0]].copy()
        for k in range(1, q):
            term *= masses[k][:, idx[k]]
        total += term
    return total


def nondominated_probability(posts: Sequence[GPPosterior], x, tess: Tessellation):
    """Probability that the responses at ``x`` are dominated by no archive point."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    means, sds, variances = [], [], []
    for post in posts:
        b = post.batch(X)
        means.append(b.mean)
        sds.append(b.sd)
        variances.append(post.kernel.variance)
    out = _nd_probability_from_moments(np.array(means), np.array(sds), tess, variances)
    return float(out[0]) if single else out


def excursion_volume(posts: Sequence[GPPosterior], grid, tess: Tessellation) -> float:
    """Weighted volume of the domain where responses may beat the front."""
    probs = nondominated_probability(posts, grid.points, tess)
    return float(grid.weights @ probs)


def excursion_volume_single(post: GPPosterior, grid, threshold: float) -> float:
    """Single-objective volume: weighted probability of falling below ``threshold``."""
    b = post.batch(grid.points)
    degenerate = b.sd < DEGENERATE_SD_FRACTION * np.sqrt(post.kernel.variance)
    z = standardize(threshold, b.mean, b.sd, degenerate)
    return float(grid.weights @ norm_cdf(z))
