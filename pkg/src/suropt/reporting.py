"""Trace and report serialization, and the full benchmark protocol.

Traces are flat CSV with header ``iter,x...,y...,eev,reduction,ev,wall_ms``
(the initial block appears as iteration 0 with NaN criterion fields), the
per-iteration indicator table is CSV, and cross-seed medians land in one
summary JSON.  Floats are written with ``repr`` so files round-trip exactly;
wall-clock columns are the only nondeterministic content.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .indicators import epsilon_indicator, hypervolume, r2_indicator, simplex_weights
from .loop import RunAborted, RunConfig, RunTrace, Seeds, run
from .pareto import extract_front
from .problems import ProblemSpec, gen_problem, load_problem

__all__ = ["trace_header", "write_trace", "read_trace", "IndicatorReport",
           "indicator_report", "write_indicators", "reference_point",
           "utopian_point", "run_benchmark"]

R2_WEIGHT_COUNT = 101


def trace_header(dim: int, n_objectives: int) -> list[str]:
    return (["iter"] + [f"x{i}" for i in range(dim)]
            + [f"y{k}" for k in range(n_objectives)]
            + ["eev", "reduction", "ev", "wall_ms"])


def write_trace(trace: RunTrace, path) -> None:
    lines = [",".join(trace_header(trace.dim, trace.n_objectives))]
    for r in trace.records:
        vals = ([float(r.iteration)] + list(r.point) + list(r.objectives)
                + [r.eev, r.reduction, r.ev, r.wall_ms])
        lines.append(",".join(repr(float(v)) for v in vals))
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class TraceTable:
    """Trace file contents as arrays."""

    dim: int
    n_objectives: int
    iterations: np.ndarray
    points: np.ndarray
    objectives: np.ndarray
    eev: np.ndarray
    reduction: np.ndarray
    ev: np.ndarray
    wall_ms: np.ndarray


def read_trace(path) -> TraceTable:
    text = Path(path).read_text().strip().splitlines()
    header = text[0].split(",")
    dim = sum(1 for c in header if c.startswith("x"))
    q = sum(1 for c in header if c.startswith("y"))
    data = np.array([[float(v) for v in line.split(",")] for line in text[1:]])
    return TraceTable(dim, q,
                      data[:, 0].astype(int),
                      data[:, 1:1 + dim],
                      data[:, 1 + dim:1 + dim + q],
                      data[:, 1 + dim + q],
                      data[:, 2 + dim + q],
                      data[:, 3 + dim + q],
                      data[:, 4 + dim + q])


def reference_point(problem: ProblemSpec) -> np.ndarray:
    """Componentwise max of the true front plus 10% of its range."""
    front = problem.true_front_values
    span = front.max(axis=0) - front.min(axis=0)
    span = np.where(span > 0.0, span, 1.0)
    return front.max(axis=0) + 0.1 * span


def utopian_point(problem: ProblemSpec) -> np.ndarray:
    """Componentwise min of the true front minus 10% of its range."""
    front = problem.true_front_values
    span = front.max(axis=0) - front.min(axis=0)
    span = np.where(span > 0.0, span, 1.0)
    return front.min(axis=0) - 0.1 * span


@dataclass
class IndicatorReport:
    """Per-iteration front quality against the problem's true front."""

    iterations: np.ndarray
    hypervolume: np.ndarray
    epsilon: np.ndarray
    r2: np.ndarray
    reference: np.ndarray
    utopian: np.ndarray
    n_weights: int


def indicator_report(trace: TraceTable | RunTrace, problem: ProblemSpec) -> IndicatorReport:
    if isinstance(trace, RunTrace):
        iters = np.array([r.iteration for r in trace.records])
        objectives = trace.archive
    else:
        iters = trace.iterations
        objectives = trace.objectives
    ref = reference_point(problem)
    uto = utopian_point(problem)
    weights = simplex_weights(R2_WEIGHT_COUNT)
    truth = problem.true_front_values
    rows = []
    for it in np.unique(iters):
        archive = objectives[iters <= it]
        front = extract_front(archive)
        rows.append((int(it),
                     hypervolume(front, ref),
                     epsilon_indicator(front, truth),
                     r2_indicator(front, weights, uto)))
    arr = np.array(rows, dtype=float)
    return IndicatorReport(arr[:, 0].astype(int), arr[:, 1], arr[:, 2], arr[:, 3],
                           ref, uto, R2_WEIGHT_COUNT)


def write_indicators(report: IndicatorReport, path) -> None:
    lines = ["iter,hypervolume,epsilon,r2"]
    for i in range(len(report.iterations)):
        lines.append(",".join([str(int(report.iterations[i])),
                               repr(float(report.hypervolume[i])),
                               repr(float(report.epsilon[i])),
                               repr(float(report.r2[i]))]))
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# full protocol
# ---------------------------------------------------------------------------

def _load_bench_problem(cfg: dict) -> ProblemSpec:
    pcfg = cfg["problem"]
    if "file" in pcfg:
        return load_problem(pcfg["file"])
    return gen_problem(pcfg["kind"], int(pcfg.get("seed", 0)))


def run_benchmark(config, out_dir) -> dict:
    """Execute every (seed, strategy) run of a benchmark configuration.

    ``config`` is a dict or a path to a JSON file with keys ``problem``
    (either ``{"kind", "seed"}`` or ``{"file"}``), ``strategies``, ``seeds``,
    ``n_initial``, ``n_iterations`` and optionally ``integration_size`` and
    ``figures``.  Writes one trace CSV and one indicator CSV per run plus a
    ``summary.json`` with per-iteration indicator medians per strategy, and
    returns the summary document.
    """
    if not isinstance(config, dict):
        config = json.loads(Path(config).read_text())
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    problem = _load_bench_problem(config)

    strategies = list(config["strategies"])
    seeds = [int(s) for s in config["seeds"]]
    n_initial = int(config["n_initial"])
    n_iterations = int(config["n_iterations"])
    integration = config.get("integration_size")
    make_figures = bool(config.get("figures", True))

    known = problem.kernels
    summary = {
        "problem": {"kind": problem.kind, "seed": problem.seed,
                    "dim": problem.dim, "n_objectives": problem.n_objectives},
        "n_initial": n_initial,
        "n_iterations": n_iterations,
        "integration_size": integration,
        "reference_point": reference_point(problem).tolist(),
        "utopian_point": utopian_point(problem).tolist(),
        "r2_weight_count": R2_WEIGHT_COUNT,
        "seeds": seeds,
        "strategies": {},
    }
    tables: dict[str, dict[str, list]] = {}
    for strategy in strategies:
        per_seed = {"hypervolume": [], "epsilon": [], "r2": [], "final_ev": [],
                    "aborted": []}
        for seed in seeds:
            cfg = RunConfig(candidate_points=problem.grid,
                            n_initial=n_initial, n_iterations=n_iterations,
                            strategy=strategy, integration_size=integration,
                            seeds=Seeds(seed, seed, problem.seed),
                            known_covariance=known)
            stem = f"{strategy}_seed{seed}"
            try:
                trace = run(cfg, problem)
                aborted = False
            except RunAborted as exc:
                trace = exc.trace
                aborted = True
            write_trace(trace, out_dir / f"trace_{stem}.csv")
            if trace.records:
                report = indicator_report(trace, problem)
                write_indicators(report, out_dir / f"indicators_{stem}.csv")
                per_seed["hypervolume"].append(report.hypervolume.tolist())
                per_seed["epsilon"].append(report.epsilon.tolist())
                per_seed["r2"].append(report.r2.tolist())
                per_seed["final_ev"].append(float(trace.ev_series[-1]))
            per_seed["aborted"].append(aborted)
        tables[strategy] = per_seed
        summary["strategies"][strategy] = {
            "hypervolume_median": np.median(np.array(per_seed["hypervolume"]), axis=0).tolist(),
            "epsilon_median": np.median(np.array(per_seed["epsilon"]), axis=0).tolist(),
            "r2_median": np.median(np.array(per_seed["r2"]), axis=0).tolist(),
            "final_ev_median": float(np.median(per_seed["final_ev"])),
            "aborted_runs": int(sum(per_seed["aborted"])),
        }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n")
    if make_figures:
        from .plots import render_benchmark_figures
        render_benchmark_figures(summary, out_dir)
    return summary
