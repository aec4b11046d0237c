"""Run artifacts: trajectory and metrics CSVs, grid dumps, run directories.

All numbers are written with locale-independent %g formatting at a fixed
number of significant digits, chosen so parsing a file and rewriting it
reproduces the bytes exactly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .footprint import StatsAccumulator
from .grid import DensityGrid, read_density, read_grid, write_density, write_grid
from .planner import MetricsRow, MissionConfig, MissionResult
from .scenario import dump_scenario, load_scenario

TRAJECTORY_HEADER = "t,robot,x,y,theta,v,w"
METRICS_HEADER = "stage,robot,phi,kl,bhattacharyya,best_cost,constraint_min,wall_ms"
TRACE_HEADER = "stage,robot,iter,best_cost,mean_cost,max_cov_eig"

CONFIG_FILE = "resolved_config.yaml"
XI_FILE = "xi.grid"
GAMMA_FILE = "gamma.grid"
ACCUMULATOR_FILE = "accumulator.grid"
METRICS_FILE = "metrics.csv"
TRACE_FILE = "cem_trace.csv"
OVERVIEW_FILE = "overview.svg"
METRICS_FIGURE = "metrics.png"
COVERAGE_FIGURE = "coverage.png"


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def trajectory_csv_text(robot_index: int, stage_trajectories, horizon: float) -> str:
    """One robot's full mission path; stage times are offset by the horizon
    and the duplicated sample at each stage joint is dropped."""
    lines = [TRAJECTORY_HEADER]
    for s, traj in enumerate(stage_trajectories):
        first = 1 if s > 0 else 0
        offset = s * horizon
        for k in range(first, traj.n_samples):
            x, y, th = traj.states[k]
            lines.append(",".join((_fmt(offset + traj.t[k]), str(robot_index),
                                   _fmt(x), _fmt(y), _fmt(th),
                                   _fmt(traj.v[k]), _fmt(traj.w[k]))))
    return "\n".join(lines) + "\n"


def write_trajectory_csv(path, robot_index: int, stage_trajectories, horizon: float):
    with open(path, "w") as fh:
        fh.write(trajectory_csv_text(robot_index, stage_trajectories, horizon))


def read_trajectory_csv(path) -> dict:
    """Parse a trajectory CSV into column arrays."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != TRAJECTORY_HEADER:
            raise ValueError(f"{path}: unexpected trajectory header {header!r}")
        rows = [line.split(",") for line in fh.read().splitlines() if line]
    cols = np.array([[float(c) for c in row] for row in rows]) if rows else np.empty((0, 7))
    return {"t": cols[:, 0], "robot": cols[:, 1].astype(int), "x": cols[:, 2],
            "y": cols[:, 3], "theta": cols[:, 4], "v": cols[:, 5], "w": cols[:, 6]}


def metrics_csv_text(rows) -> str:
    lines = [METRICS_HEADER]
    for r in rows:
        lines.append(",".join((str(r.stage), str(r.robot), _fmt(r.phi), _fmt(r.kl),
                               _fmt(r.bhattacharyya), _fmt(r.best_cost),
                               _fmt(r.constraint_min), _fmt(r.wall_ms))))
    return "\n".join(lines) + "\n"


def write_metrics_csv(path, rows) -> None:
    with open(path, "w") as fh:
        fh.write(metrics_csv_text(rows))


def read_metrics_csv(path) -> list[MetricsRow]:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != METRICS_HEADER:
            raise ValueError(f"{path}: unexpected metrics header {header!r}")
        out = []
        for line in fh.read().splitlines():
            if not line:
                continue
            parts = line.split(",")
            out.append(MetricsRow(int(parts[0]), int(parts[1]), *map(float, parts[2:])))
    return out


def trace_csv_text(diagnostics, n_robots: int) -> str:
    lines = [TRACE_HEADER]
    for idx, diag in enumerate(diagnostics):
        stage, robot = divmod(idx, n_robots)
        for it, best, mean, eig in diag.history:
            lines.append(",".join((str(stage + 1), str(robot), str(it),
                                   _fmt(best), _fmt(mean), _fmt(eig))))
    return "\n".join(lines) + "\n"


def write_accumulator(path, acc: StatsAccumulator) -> None:
    write_grid(path, acc.domain, acc.mass,
               comments=(f"total_time {acc.total_time:.17g}",
                         f"contributions {acc.contributions}"))


def read_accumulator(path) -> StatsAccumulator:
    domain, mass, comments = read_grid(path)
    total_time = 0.0
    contributions = 0
    for c in comments:
        parts = c.split()
        if len(parts) == 2 and parts[0] == "total_time":
            total_time = float(parts[1])
        elif len(parts) == 2 and parts[0] == "contributions":
            contributions = int(parts[1])
    return StatsAccumulator(domain, mass, total_time, contributions)


@dataclass
class RunArtifacts:
    """Paths of everything a mission run wrote."""

    directory: str
    config: str
    xi: str
    metrics: str
    trajectories: list[str]
    gamma: Optional[str] = None
    accumulator: Optional[str] = None
    overview: Optional[str] = None
    figures: tuple[str, ...] = ()
    trace: Optional[str] = None


def write_run(result: MissionResult, out_dir, trace: bool = False) -> RunArtifacts:
    """Persist a mission result (possibly partial) into a run directory."""
    os.makedirs(out_dir, exist_ok=True)
    config_path = os.path.join(out_dir, CONFIG_FILE)
    dump_scenario(result.config, config_path)
    xi_path = os.path.join(out_dir, XI_FILE)
    write_density(xi_path, result.xi)
    metrics_path = os.path.join(out_dir, METRICS_FILE)
    write_metrics_csv(metrics_path, result.metrics)
    traj_paths = []
    for j, stage_trajs in enumerate(result.trajectories):
        path = os.path.join(out_dir, f"trajectory_robot{j}.csv")
        write_trajectory_csv(path, j, stage_trajs, result.config.horizon)
        traj_paths.append(path)
    artifacts = RunArtifacts(directory=str(out_dir), config=config_path,
                             xi=xi_path, metrics=metrics_path,
                             trajectories=traj_paths)
    if result.accumulator.total_time > 0.0:
        gamma_path = os.path.join(out_dir, GAMMA_FILE)
        write_density(gamma_path, result.gamma())
        acc_path = os.path.join(out_dir, ACCUMULATOR_FILE)
        write_accumulator(acc_path, result.accumulator)
        artifacts.gamma = gamma_path
        artifacts.accumulator = acc_path
    if trace:
        trace_path = os.path.join(out_dir, TRACE_FILE)
        with open(trace_path, "w") as fh:
            fh.write(trace_csv_text(result.diagnostics, len(result.config.robots)))
        artifacts.trace = trace_path
    return artifacts


@dataclass
class RunData:
    """Artifacts loaded back from a run directory."""

    config: MissionConfig
    xi: DensityGrid
    gamma: Optional[DensityGrid]
    metrics: list[MetricsRow]
    trajectories: list[dict]


def read_run(run_dir) -> RunData:
    config = load_scenario(os.path.join(run_dir, CONFIG_FILE))
    xi = read_density(os.path.join(run_dir, XI_FILE))
    gamma_path = os.path.join(run_dir, GAMMA_FILE)
    gamma = read_density(gamma_path) if os.path.exists(gamma_path) else None
    metrics = read_metrics_csv(os.path.join(run_dir, METRICS_FILE))
    trajectories = []
    for j in range(len(config.robots)):
        path = os.path.join(run_dir, f"trajectory_robot{j}.csv")
        if os.path.exists(path):
            trajectories.append(read_trajectory_csv(path))
    return RunData(config, xi, gamma, metrics, trajectories)
