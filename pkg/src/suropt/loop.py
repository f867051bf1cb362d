"""Sequential design driver: select, observe, refresh, record.

A run owns per-objective kriging models over a finite candidate set, picks
the next observation by minimizing the expected excursion volume (or by one
of the baseline rules), evaluates the problem there, refreshes the models and
the Pareto state, and records one trace row per iteration.  Runs are
deterministic given their seeds.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .criteria import (CriterionValue, IntegrationGrid, SingleObjectiveState,
                       eev_multi, eev_multi_fast2d, eev_single, ei_value)
from .gp import (DUPLICATE_VARIANCE_FRACTION, Design, GPPosterior,
                 HyperparameterBounds, KernelSpec, TrendBasis,
                 estimate_hyperparameters, fit)
from .pareto import ParetoState, build_tessellation, extract_front

__all__ = ["Seeds", "RunConfig", "IterationRecord", "RunTrace", "RunAborted",
           "Problem", "initial_design", "select_next", "run",
           "current_excursion_volume"]

STRATEGIES = ("sur", "ei_scalarized", "random")


class Problem(Protocol):
    """Anything a run can query for objective values."""

    @property
    def n_objectives(self) -> int: ...

    def evaluate(self, x) -> np.ndarray: ...


@dataclass(frozen=True)
class Seeds:
    design: int
    candidate: int
    problem: int


@dataclass
class RunConfig:
    """Everything that determines a run besides the problem itself."""

    candidate_points: np.ndarray
    n_initial: int
    n_iterations: int
    strategy: str = "sur"
    integration_size: int | None = None
    seeds: Seeds = field(default_factory=lambda: Seeds(0, 0, 0))
    known_covariance: Sequence[KernelSpec] | None = None
    refit_hyperparameters: bool = True
    kernel_family: str = "matern52"
    trend: TrendBasis = field(default_factory=TrendBasis.constant)

    def __post_init__(self):
        self.candidate_points = np.atleast_2d(np.asarray(self.candidate_points, dtype=float))
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if self.n_initial < max(2, self.trend.size + 1):
            raise ValueError("need at least max(2, p + 1) initial observations")
        if self.n_initial > len(self.candidate_points):
            raise ValueError("more initial points requested than candidates available")

    @property
    def dim(self) -> int:
        return self.candidate_points.shape[1]


@dataclass
class IterationRecord:
    iteration: int
    point: np.ndarray
    objectives: np.ndarray
    eev: float
    reduction: float
    ev: float
    wall_ms: float


@dataclass
class RunTrace:
    dim: int
    n_objectives: int
    records: list[IterationRecord] = field(default_factory=list)
    fronts: list[ParetoState] = field(default_factory=list)
    aborted: bool = False

    @property
    def archive(self) -> np.ndarray:
        return np.array([r.objectives for r in self.records])

    @property
    def ev_series(self) -> np.ndarray:
        return np.array([r.ev for r in self.records])


class RunAborted(RuntimeError):
    """Model refresh failed mid-run; carries the partial trace."""

    def __init__(self, message: str, trace: RunTrace):
        super().__init__(message)
        self.trace = trace


def initial_design(config: RunConfig) -> np.ndarray:
    """Indices of the seeded initial sample, drawn without replacement."""
    rng = np.random.default_rng(config.seeds.design)
    return rng.choice(len(config.candidate_points), size=config.n_initial, replace=False)


def current_excursion_volume(posts: Sequence[GPPosterior], grid: IntegrationGrid,
                             pareto: ParetoState) -> float:
    """Excursion volume of the current state, any number of objectives."""
    from .pareto import excursion_volume, excursion_volume_single
    if len(posts) == 1:
        return excursion_volume_single(posts[0], grid, float(pareto.values.min()))
    return excursion_volume(posts, grid, build_tessellation(pareto))


def select_next(posts: Sequence[GPPosterior], pareto: ParetoState,
                grid: IntegrationGrid, candidates) -> tuple[int, CriterionValue]:
    """Candidate minimizing the expected excursion volume.

    Candidates already determined by the designs (duplicates of observed
    points) are excluded before scoring; ties break to the lowest index.
    Returns the index into ``candidates`` and the winning criterion value.
    """
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    live = _informative_mask(posts, candidates)
    if not live.any():
        raise ValueError("no informative candidates remain")
    if len(posts) == 1:
        state = SingleObjectiveState(posts[0], float(pareto.values.min()))
        score = lambda x: eev_single(state, grid, x)
    elif len(posts) == 2:
        score = lambda x: eev_multi_fast2d(posts, grid, pareto, x)
    else:
        tess = build_tessellation(pareto)
        score = lambda x: eev_multi(posts, grid, tess, x)
    best_idx, best_value = -1, None
    for i in np.flatnonzero(live):
        value = score(candidates[i])
        if best_value is None or value.eev < best_value.eev:
            best_idx, best_value = int(i), value
    return best_idx, best_value


def _informative_mask(posts, candidates) -> np.ndarray:
    live = np.zeros(len(candidates), dtype=bool)
    for post in posts:
        _, var = post.predict(candidates)
        live |= var >= DUPLICATE_VARIANCE_FRACTION * post.kernel.variance
    return live


def _fit_objectives(config: RunConfig, points: np.ndarray, values: np.ndarray,
                    previous: Sequence[GPPosterior] | None) -> list[GPPosterior]:
    posts = []
    for k in range(values.shape[1]):
        design = Design(points, values[:, k])
        if config.known_covariance is not None:
            spec = config.known_covariance[k]
        elif previous is not None and not config.refit_hyperparameters:
            spec = previous[k].kernel
        else:
            spec = estimate_hyperparameters(design, config.kernel_family, config.trend,
                                            seed=config.seeds.design + k)
        posts.append(fit(design, spec, config.trend))
    return posts


def run(config: RunConfig, problem: Problem) -> RunTrace:
    """Execute the full sequential design and return its trace.

    The trace records the initial observations as iteration 0 (criterion
    fields NaN) followed by one row per added observation.  A model-fit
    failure aborts with the partial trace attached.
    """
    q = problem.n_objectives
    trace = RunTrace(config.dim, q)
    rng_candidate = np.random.default_rng(config.seeds.candidate)
    grid = IntegrationGrid.sobol(
        config.dim, config.integration_size or IntegrationGrid.default_size(config.dim))

    t0 = time.perf_counter()
    init_idx = initial_design(config)
    points = config.candidate_points[init_idx]
    values = np.array([np.atleast_1d(problem.evaluate(x)) for x in points], dtype=float)
    observed = set(int(i) for i in init_idx)
    try:
        posts = _fit_objectives(config, points, values, previous=None)
    except Exception as exc:
        trace.aborted = True
        raise RunAborted(f"initial model fit failed: {exc}", trace) from exc
    pareto = extract_front(values)
    ev_now = current_excursion_volume(posts, grid, pareto)
    init_ms = (time.perf_counter() - t0) * 1000.0 / max(len(init_idx), 1)
    for x, y in zip(points, values):
        trace.records.append(IterationRecord(0, x.copy(), y.copy(),
                                             float("nan"), float("nan"), ev_now, init_ms))
    trace.fronts.append(pareto)

    for it in range(1, config.n_iterations + 1):
        t0 = time.perf_counter()
        available = np.array(sorted(set(range(len(config.candidate_points))) - observed))
        if len(available) == 0:
            break
        candidates = config.candidate_points[available]
        try:
            if config.strategy == "sur":
                local, value = select_next(posts, pareto, grid, candidates)
                pick = int(available[local])
                eev, reduction = value.eev, value.reduction
            elif config.strategy == "random":
                live = _informative_mask(posts, candidates)
                choices = available[live] if live.any() else available
                pick = int(rng_candidate.choice(choices))
                eev = reduction = float("nan")
            else:  # ei_scalarized
                pick = _ei_scalarized_pick(posts, values, candidates, rng_candidate)
                pick = int(available[pick])
                eev = reduction = float("nan")

            x_new = config.candidate_points[pick]
            y_new = np.atleast_1d(problem.evaluate(x_new)).astype(float)
            observed.add(pick)
            points = np.vstack([points, x_new[None, :]])
            values = np.vstack([values, y_new[None, :]])
            posts = _fit_objectives(config, points, values, previous=posts)
        except RunAborted:
            raise
        except Exception as exc:
            trace.aborted = True
            raise RunAborted(f"iteration {it} failed: {exc}", trace) from exc
        pareto = extract_front(values)
        ev_now = current_excursion_volume(posts, grid, pareto)
        wall_ms = (time.perf_counter() - t0) * 1000.0
        trace.records.append(IterationRecord(it, x_new.copy(), y_new.copy(),
                                             float(eev), float(reduction), ev_now, wall_ms))
        trace.fronts.append(pareto)
    return trace


def _ei_scalarized_pick(posts, values, candidates, rng) -> int:
    """Random-weight scalarization of range-normalized objectives, then EI.

    A nonnegative weight vector summing to one is drawn per iteration; the
    weighted sum of independent kriging models is itself Gaussian, so the
    standard closed-form criterion applies to the combined moments.
    """
    q = values.shape[1]
    w = rng.dirichlet(np.ones(q)) if q > 1 else np.ones(1)
    spread = values.max(axis=0) - values.min(axis=0)
    spread = np.where(spread > 0.0, spread, 1.0)
    coef = w / spread
    scalar_obs = values @ coef
    mean = np.zeros(len(candidates))
    var = np.zeros(len(candidates))
    for k, post in enumerate(posts):
        m, v = post.predict(candidates)
        mean += coef[k] * m
        var += coef[k] ** 2 * v
    ei = ei_value(float(scalar_obs.min()), mean, np.sqrt(var))
    return int(np.argmax(ei))
