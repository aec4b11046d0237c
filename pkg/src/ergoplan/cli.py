"""Command-line entry points: plan a scenario, recompute metrics, render.

Planning and rendering are separate subcommands so metric recomputation and
plotting can run headless against a finished run directory.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from . import artifacts, render, scenario
from .grid import bhattacharyya, kl_divergence
from .planner import plan_mission
from .spectral import density_coeffs, ergodicity_metric


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ergoplan",
                                     description="Ergodic coverage trajectory planner")
    sub = parser.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="run a mission from a scenario file")
    plan.add_argument("scenario", help="path to a scenario YAML file")
    plan.add_argument("--seed", type=int, default=None, help="override the RNG seed")
    plan.add_argument("--out", default=None, help="output directory")
    plan.add_argument("--objective", choices=("kl", "ergodic"), default=None,
                      help="override the scenario objective")
    plan.add_argument("--stages", type=int, default=None,
                      help="override the scenario stage count")
    plan.add_argument("--trace", action="store_true",
                      help="also write the per-iteration optimizer trace CSV")

    metrics = sub.add_parser("metrics", help="recompute metrics from run dumps")
    metrics.add_argument("run_dir", help="directory written by 'plan'")

    rend = sub.add_parser("render", help="re-render figures from run dumps")
    rend.add_argument("run_dir", help="directory written by 'plan'")
    return parser


def _render_outputs(run_dir, config, xi, gamma, metrics_rows, trajectories) -> None:
    positions = [list(zip(t["x"], t["y"])) for t in trajectories]
    starts = [r.start[:2] for r in config.robots]
    goal = config.goal.state[:2] if config.goal.enabled else None
    svg = render.render_svg(xi, positions, config.obstacles, starts, goal)
    render.write_svg(os.path.join(run_dir, artifacts.OVERVIEW_FILE), svg)
    render.save_metrics_figure(metrics_rows, os.path.join(run_dir, artifacts.METRICS_FIGURE))
    render.save_coverage_figure(xi, gamma, positions, config.obstacles,
                                os.path.join(run_dir, artifacts.COVERAGE_FIGURE),
                                goal=goal)


def _cmd_plan(args) -> int:
    config = scenario.load_scenario(args.scenario)
    if args.objective is not None:
        config = dataclasses.replace(config, objective=args.objective)
    if args.stages is not None:
        config = dataclasses.replace(config, stages=args.stages)
    if args.seed is not None:
        config = dataclasses.replace(config, cem=dataclasses.replace(config.cem,
                                                                     seed=args.seed))
    out_dir = args.out or config.output
    if out_dir is None:
        stem = os.path.splitext(os.path.basename(args.scenario))[0]
        out_dir = os.path.join("runs", stem)

    result = plan_mission(config)
    run = artifacts.write_run(result, out_dir, trace=args.trace)
    data = artifacts.read_run(out_dir)
    _render_outputs(out_dir, result.config, result.xi,
                    result.gamma() if result.accumulator.total_time > 0 else None,
                    result.metrics, data.trajectories)
    if result.error is not None:
        print(f"mission aborted: {result.error}", file=sys.stderr)
        print(f"partial artifacts in {run.directory}", file=sys.stderr)
        return 1
    print(f"wrote {run.directory}")
    return 0


def _cmd_metrics(args) -> int:
    data = artifacts.read_run(args.run_dir)
    if data.gamma is None:
        print("run directory holds no coverage dump", file=sys.stderr)
        return 1
    coeffs_xi = density_coeffs(data.xi, data.config.k_max)
    coeffs_gamma = density_coeffs(data.gamma, data.config.k_max)
    print(f"phi,{ergodicity_metric(coeffs_gamma, coeffs_xi):.9g}")
    print(f"kl,{kl_divergence(data.gamma, data.xi):.9g}")
    print(f"bhattacharyya,{bhattacharyya(data.gamma, data.xi):.9g}")
    return 0


def _cmd_render(args) -> int:
    data = artifacts.read_run(args.run_dir)
    _render_outputs(args.run_dir, data.config, data.xi, data.gamma,
                    data.metrics, data.trajectories)
    print(f"rendered {args.run_dir}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "plan":
            return _cmd_plan(args)
        if args.command == "metrics":
            return _cmd_metrics(args)
        return _cmd_render(args)
    except (scenario.ScenarioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
