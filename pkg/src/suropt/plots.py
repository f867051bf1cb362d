"""Figure rendering for run traces and benchmark reports.

All figures are written to files (Agg backend); nothing is shown
interactively.  These functions consume the same tables the CSV writers do,
so a figure can always be regenerated from the delimited artifacts alone.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_trace_figure", "render_indicator_figure", "render_benchmark_figures"]


def render_trace_figure(trace, problem=None, path="trace.png") -> Path:
    """Two-panel run summary: uncertainty-volume decay and criterion values,
    plus the final front in objective space when the problem is bi-objective.
    """
    from .pareto import extract_front

    if hasattr(trace, "records"):   # RunTrace
        iters = np.array([r.iteration for r in trace.records])
        objectives = np.array([r.objectives for r in trace.records])
        ev = np.array([r.ev for r in trace.records])
        eev = np.array([r.eev for r in trace.records])
    else:                           # TraceTable
        iters, objectives, ev, eev = trace.iterations, trace.objectives, trace.ev, trace.eev
    q = objectives.shape[1]

    n_panels = 3 if q == 2 else 2
    fig, axes = plt.subplots(1, n_panels, figsize=(4.2 * n_panels, 3.4))
    ax = axes[0]
    ax.plot(iters, ev, "o-", ms=3, color="tab:blue")
    ax.set_xlabel("iteration")
    ax.set_ylabel("excursion volume")
    ax.set_title("uncertainty decay")

    ax = axes[1]
    live = np.isfinite(eev)
    ax.plot(iters[live], eev[live], "s-", ms=3, color="tab:orange")
    ax.set_xlabel("iteration")
    ax.set_ylabel("criterion at selection")
    ax.set_title("expected volume of pick")

    if q == 2:
        ax = axes[2]
        ax.scatter(objectives[:, 0], objectives[:, 1], s=14, c="0.6", label="observed")
        front = extract_front(objectives)
        ax.plot(front.values[:, 0], front.values[:, 1], "o-", ms=4,
                color="tab:blue", label="front")
        if problem is not None:
            truth = problem.true_front_values
            ax.plot(truth[:, 0], truth[:, 1], "x", ms=5, color="tab:red", label="true front")
        ax.set_xlabel("objective 1")
        ax.set_ylabel("objective 2")
        ax.legend(fontsize=8)
        ax.set_title("objective space")

    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_indicator_figure(report, path="indicators.png") -> Path:
    """Indicator curves for one run."""
    fig, axes = plt.subplots(1, 3, figsize=(12.0, 3.4))
    for ax, series, name in zip(axes,
                                (report.hypervolume, report.epsilon, report.r2),
                                ("hypervolume", "epsilon", "r2")):
        ax.plot(report.iterations, series, "o-", ms=3)
        ax.set_xlabel("iteration")
        ax.set_ylabel(name)
    axes[0].set_title("higher is better")
    axes[1].set_title("lower is better")
    axes[2].set_title("lower is better")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_benchmark_figures(summary: dict, out_dir) -> Path:
    """Median indicator curves per strategy from a benchmark summary."""
    out_dir = Path(out_dir)
    fig, axes = plt.subplots(1, 3, figsize=(12.0, 3.4))
    names = ("hypervolume_median", "epsilon_median", "r2_median")
    labels = ("median hypervolume", "median epsilon", "median r2")
    for strategy, data in summary["strategies"].items():
        for ax, name in zip(axes, names):
            series = data[name]
            ax.plot(range(len(series)), series, "o-", ms=3, label=strategy)
    for ax, label in zip(axes, labels):
        ax.set_xlabel("iteration")
        ax.set_ylabel(label)
        ax.legend(fontsize=8)
    fig.tight_layout()
    path = out_dir / "summary.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
