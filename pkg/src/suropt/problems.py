"""Benchmark problem generation and serialization.

A problem is a finite grid in the unit cube together with stored objective
values at every grid point — realizations of independent Gaussian processes
with known kernels — plus the exact Pareto front of the grid.  Problems
round-trip through a single JSON document so runs are reproducible across
machines byte for byte.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import qmc

from .gp import KernelSpec, sample_paths
from .pareto import extract_front

__all__ = ["ProblemSpec", "gen_problem", "make_problem", "save_problem", "load_problem"]

SCHEMA_VERSION = 1
PAPER_KINDS = ("paper_1d", "paper_6d")


@dataclass
class ProblemSpec:
    """Grid-indexed multiobjective test problem with stored realizations."""

    kind: str
    dim: int
    grid: np.ndarray                 # (N, d) in [0, 1]^d
    kernels: list[KernelSpec]        # one per objective
    seed: int
    values: np.ndarray               # (N, q)
    true_front_indices: np.ndarray
    true_front_values: np.ndarray

    def __post_init__(self):
        self.grid = np.atleast_2d(np.asarray(self.grid, dtype=float))
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.shape[0] != self.grid.shape[0]:
            raise ValueError("one objective row required per grid point")
        if np.any(self.grid < 0.0) or np.any(self.grid > 1.0):
            raise ValueError("grid points must lie in the unit cube")

    @property
    def n_objectives(self) -> int:
        return self.values.shape[1]

    @property
    def n_points(self) -> int:
        return len(self.grid)

    def evaluate(self, x) -> np.ndarray:
        """Objective vector at a grid point (exact-match lookup)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        hits = np.flatnonzero(np.all(np.isclose(self.grid, x[None, :],
                                                rtol=0.0, atol=1e-12), axis=1))
        if len(hits) == 0:
            raise KeyError(f"point {x} is not on the problem grid")
        return self.values[hits[0]].copy()


def _regular_grid_1d(n: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, n)[:, None]


def _sobol_grid(dim: int, n: int) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return qmc.Sobol(d=dim, scramble=False).random(n)


def make_problem(kind: str, grid: np.ndarray, kernels: list[KernelSpec],
                 seed: int) -> ProblemSpec:
    """Draw one realization per kernel on the grid and precompute the front."""
    child_seeds = np.random.SeedSequence(seed).generate_state(len(kernels))
    values = np.column_stack([
        sample_paths(spec, grid, n_paths=1, seed=int(s))[0]
        for spec, s in zip(kernels, child_seeds)])
    front = extract_front(values)
    return ProblemSpec(kind, grid.shape[1], grid, list(kernels), seed, values,
                       front.indices, front.values)


def gen_problem(kind: str, seed: int) -> ProblemSpec:
    """Built-in benchmark problems.

    ``paper_1d``: 300-point regular grid on [0, 1], two independent
    Matern-3/2 draws with variance 1 and range 0.2.
    ``paper_6d``: 2000-point Sobol set on [0, 1]^6, two independent
    Matern-5/2 draws with variance 1 and ranges sqrt(6)/6.
    """
    if kind == "paper_1d":
        grid = _regular_grid_1d(300)
        spec = KernelSpec("matern32", 1.0, (0.2,))
        return make_problem(kind, grid, [spec, spec], seed)
    if kind == "paper_6d":
        grid = _sobol_grid(6, 2000)
        spec = KernelSpec("matern52", 1.0, (math.sqrt(6.0) / 6.0,) * 6)
        return make_problem(kind, grid, [spec, spec], seed)
    raise ValueError(f"unknown problem kind {kind!r}; expected one of {PAPER_KINDS}")


def save_problem(problem: ProblemSpec, path) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": problem.kind,
        "dim": problem.dim,
        "seed": problem.seed,
        "kernels": [{"family": k.family, "variance": k.variance, "ranges": list(k.ranges)}
                    for k in problem.kernels],
        "grid": problem.grid.tolist(),
        "values": problem.values.tolist(),
        "true_front_indices": problem.true_front_indices.tolist(),
        "true_front_values": problem.true_front_values.tolist(),
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")


def load_problem(path) -> ProblemSpec:
    doc = json.loads(Path(path).read_text())
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported problem schema version {version!r}")
    kernels = [KernelSpec(k["family"], k["variance"], tuple(k["ranges"]))
               for k in doc["kernels"]]
    return ProblemSpec(doc["kind"], doc["dim"], np.array(doc["grid"], dtype=float),
                       kernels, doc["seed"], np.array(doc["values"], dtype=float),
                       np.array(doc["true_front_indices"], dtype=int),
                       np.array(doc["true_front_values"], dtype=float))
