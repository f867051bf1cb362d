"""Command-line interface.

Subcommands:
  gen           generate a benchmark problem file
  run           one optimization run on a problem, trace CSV + figure
  indicators    per-iteration quality indicators of a trace, CSV + figure
  oracle-check  closed forms versus Monte-Carlo suites, nonzero exit on failure
  bench         the full (seeds x strategies) protocol with summary and figures
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .loop import RunAborted, RunConfig, Seeds, run
from .problems import PAPER_KINDS, gen_problem, load_problem, save_problem
from .reporting import indicator_report, read_trace, run_benchmark, write_indicators, write_trace

__all__ = ["main"]


def _cmd_gen(args) -> int:
    problem = gen_problem(args.kind, args.seed)
    save_problem(problem, args.out)
    print(f"wrote {args.kind} problem (seed {args.seed}, {problem.n_points} points, "
          f"{problem.n_objectives} objectives) to {args.out}")
    return 0


def _cmd_run(args) -> int:
    problem = load_problem(args.problem)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = RunConfig(candidate_points=problem.grid,
                       n_initial=args.init, n_iterations=args.iters,
                       strategy=args.strategy, integration_size=args.integration,
                       seeds=Seeds(args.seed, args.seed, problem.seed),
                       known_covariance=problem.kernels)
    stem = f"{args.strategy}_seed{args.seed}"
    try:
        trace = run(config, problem)
        code = 0
    except RunAborted as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        trace = exc.trace
        code = 1
    trace_path = out_dir / f"trace_{stem}.csv"
    write_trace(trace, trace_path)
    print(f"wrote {trace_path}")
    if trace.records and not args.no_figures:
        from .plots import render_trace_figure
        fig = render_trace_figure(trace, problem, out_dir / f"trace_{stem}.png")
        print(f"wrote {fig}")
    return code


def _cmd_indicators(args) -> int:
    problem = load_problem(args.problem)
    trace = read_trace(args.trace)
    report = indicator_report(trace, problem)
    write_indicators(report, args.out)
    print(f"wrote {args.out}")
    if not args.no_figures:
        from .plots import render_indicator_figure
        fig = render_indicator_figure(report, Path(args.out).with_suffix(".png"))
        print(f"wrote {fig}")
    return 0


def _cmd_bench(args) -> int:
    summary = run_benchmark(args.config, args.out)
    aborted = sum(s["aborted_runs"] for s in summary["strategies"].values())
    print(f"wrote benchmark artifacts to {args.out} "
          f"({len(summary['seeds'])} seeds x {len(summary['strategies'])} strategies"
          + (f", {aborted} aborted" if aborted else "") + ")")
    return 0


# ---------------------------------------------------------------------------
# oracle-check: closed forms against their simulation estimators
# ---------------------------------------------------------------------------

def _random_model(rng, n, dim, family):
    from .gp import Design, KernelSpec, fit
    spec = KernelSpec(family, float(rng.uniform(0.5, 2.0)),
                      tuple(rng.uniform(0.15, 0.6, size=dim)))
    pts = rng.uniform(0.0, 1.0, size=(n, dim))
    vals = rng.standard_normal(n) * np.sqrt(spec.variance)
    return fit(Design(pts, vals), spec)


def _check_prob_suite(draws, seed, n_cases=20) -> list[str]:
    from .pairprob import h_prob, link_coefficients, q_prob, r_prob
    from .oracle import mc_pair_expectations
    rng = np.random.default_rng(seed)
    failures = []
    for case in range(n_cases):
        dim = int(rng.choice([1, 2]))
        family = str(rng.choice(["matern32", "matern52"]))
        post = _random_model(rng, int(rng.integers(3, 10)), dim, family)
        x = rng.uniform(0, 1, dim)
        x_plus = rng.uniform(0, 1, dim)
        a, b = sorted(rng.normal(0.0, 1.0, size=2))
        link = link_coefficients(post, x, x_plus, a, b)
        closed = {"q": q_prob(link), "r": r_prob(link), "h": h_prob(link)}
        est = dict(zip("qrh", mc_pair_expectations(post, x, x_plus, a, b,
                                                   draws, seed + case)))
        for name in "qrh":
            if not est[name].brackets(closed[name]):
                failures.append(f"prob case {case}: {name}={closed[name]:.6f} outside "
                                f"3 SE of {est[name].mean:.6f} +- {est[name].std_error:.2e}")
    return failures


def _check_eev_suite(draws, seed, n_cases=6) -> list[str]:
    from .criteria import IntegrationGrid, SingleObjectiveState, eev_multi_fast2d, eev_single
    from .oracle import mc_eev
    rng = np.random.default_rng(seed)
    failures = []
    for case in range(n_cases):
        dim = int(rng.choice([1, 2]))
        grid = IntegrationGrid.sobol(dim, 128)
        x_plus = rng.uniform(0, 1, dim)
        if case % 2 == 0:
            post = _random_model(rng, int(rng.integers(4, 10)), dim, "matern52")
            state = SingleObjectiveState(post, float(post.design.observations.min()))
            closed = eev_single(state, grid, x_plus).eev
            est = mc_eev([post], grid, post.design.observations, x_plus,
                         draws, seed + case)
            label = "single"
        else:
            pts = rng.uniform(0, 1, size=(int(rng.integers(4, 9)), dim))
            posts, values = [], []
            for _ in range(2):
                from .gp import Design, KernelSpec, fit
                spec = KernelSpec("matern32", 1.0, tuple(rng.uniform(0.2, 0.5, dim)))
                vals = rng.standard_normal(len(pts))
                posts.append(fit(Design(pts, vals), spec))
                values.append(vals)
            archive = np.column_stack(values)
            from .pareto import extract_front
            closed = eev_multi_fast2d(posts, grid, extract_front(archive), x_plus).eev
            est = mc_eev(posts, grid, archive, x_plus, max(draws // 10, 1000), seed + case)
            label = "multi"
        if not est.brackets(closed):
            failures.append(f"eev {label} case {case}: {closed:.6f} outside 3 SE of "
                            f"{est.mean:.6f} +- {est.std_error:.2e}")
    return failures


def _cmd_oracle_check(args) -> int:
    failures = []
    if args.suite in ("all", "prob"):
        failures += _check_prob_suite(args.draws, args.seed)
    if args.suite in ("all", "eev"):
        failures += _check_eev_suite(args.draws, args.seed)
    if failures:
        for f in failures:
            print(f"FAIL {f}")
        return 1
    print(f"oracle-check suite={args.suite}: all closed forms within 3 SE")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="suropt", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a benchmark problem file")
    p.add_argument("--kind", choices=PAPER_KINDS, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("run", help="one optimization run on a problem")
    p.add_argument("--problem", required=True)
    p.add_argument("--strategy", choices=("sur", "ei_scalarized", "random"), default="sur")
    p.add_argument("--init", type=int, required=True)
    p.add_argument("--iters", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--integration", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("indicators", help="quality indicators for a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=_cmd_indicators)

    p = sub.add_parser("oracle-check", help="closed forms vs Monte-Carlo estimators")
    p.add_argument("--suite", choices=("all", "prob", "eev"), default="all")
    p.add_argument("--draws", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_oracle_check)

    p = sub.add_parser("bench", help="full benchmark protocol from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
