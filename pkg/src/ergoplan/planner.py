"""Stage cost assembly, receding-horizon planning, and robot sequencing.

A mission runs a fixed number of stages; in every stage each robot in turn
optimizes its next horizon with the cross-entropy method against the
coverage objective, taking into account everything every robot has already
flown, then commits the winning trajectory to the shared statistics.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from . import cem
from .dubins import InputBounds, ParamVector, RobotState, Trajectory, clamp_params, rollout, wrap_angle
from .footprint import Footprint, StatsAccumulator, accumulate, sample_mass, to_pdf
from .grid import (DensityGrid, DomainSpec, GmmComponent, _kl_sum, _pdf_values,
                   bhattacharyya, build_gmm_density, epsilon_floor, kl_divergence,
                   read_density)
from .spectral import CoeffSet, density_coeffs, ergodicity_metric, position_integral

# Infeasible candidates pay a constant offset plus a per-meter rate on the
# worst penetration, so the optimizer can still rank them.
PENALTY_OFFSET = 1e6
PENALTY_PER_METER = 1e6

OBJECTIVES = ("kl", "ergodic")

# Stage planning runs the optimizer up to this many times: fresh box-wide
# starts while the incumbent is still infeasible, then one refinement start
# centered on the incumbent with the box shrunk by REFINE_SHRINK. Long
# horizons need the restarts because almost all box-wide samples violate the
# domain constraint, and the graded penalty alone can strand the sampling
# distribution in an infeasible basin.
STAGE_ATTEMPTS = 4
REFINE_SHRINK = 6.0


@dataclass(frozen=True)
class CircleObstacle:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError(f"obstacle radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class PolygonObstacle:
    """Convex polygon, vertices in counterclockwise order."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[0] < 3 or verts.shape[1] != 2:
            raise ValueError("polygon needs at least 3 planar vertices")
        k = verts.shape[0]
        for i in range(k):
            e1 = verts[(i + 1) % k] - verts[i]
            e2 = verts[(i + 2) % k] - verts[(i + 1) % k]
            if e1[0] * e2[1] - e1[1] * e2[0] <= 0.0:
                raise ValueError("polygon vertices must be strictly convex "
                                 "in counterclockwise order")


Obstacle = Union[CircleObstacle, PolygonObstacle]


def _circle_distance(xs, ys, obs: CircleObstacle) -> np.ndarray:
    return np.hypot(xs - obs.center[0], ys - obs.center[1]) - obs.radius


def _polygon_distance(xs, ys, obs: PolygonObstacle) -> np.ndarray:
    """Signed distance to the polygon boundary, negative inside."""
    verts = np.asarray(obs.vertices, dtype=float)
    k = verts.shape[0]
    min_d = np.full(np.shape(xs), np.inf)
    inside = np.ones(np.shape(xs), dtype=bool)
    for i in range(k):
        ax, ay = verts[i]
        ex, ey = verts[(i + 1) % k] - verts[i]
        px = xs - ax
        py = ys - ay
        inside &= (ex * py - ey * px) >= 0.0
        t = np.clip((px * ex + py * ey) / (ex * ex + ey * ey), 0.0, 1.0)
        min_d = np.minimum(min_d, np.hypot(px - t * ex, py - t * ey))
    return np.where(inside, -min_d, min_d)


def _obstacle_distance(xs, ys, obs: Obstacle) -> np.ndarray:
    if isinstance(obs, CircleObstacle):
        return _circle_distance(xs, ys, obs)
    if isinstance(obs, PolygonObstacle):
        return _polygon_distance(xs, ys, obs)
    raise TypeError(f"unknown obstacle {obs!r}")


def prox(state, body_radius: float, obstacle: Obstacle) -> float:
    """Signed clearance between a disc robot and an obstacle (negative on
    overlap, zero when they touch)."""
    x, y = state[0], state[1]
    d = _obstacle_distance(np.asarray([x], dtype=float), np.asarray([y], dtype=float),
                           obstacle)
    return float(d[0]) - body_radius


def domain_margin(xs, ys, domain: DomainSpec) -> np.ndarray:
    """Distance of points to the domain boundary, negative outside."""
    L1, L2 = domain.lengths
    return np.minimum(np.minimum(xs, L1 - xs), np.minimum(ys, L2 - ys))


def constraint_min(traj: Trajectory, body_radius: float, obstacles,
                   domain: DomainSpec) -> float:
    """Worst clearance over all samples: obstacle prox values and the margin
    to the domain boundary. Negative means the trajectory is infeasible."""
    xs = traj.states[:, 0]
    ys = traj.states[:, 1]
    worst = float(domain_margin(xs, ys, domain).min())
    for obs in obstacles:
        worst = min(worst, float(_obstacle_distance(xs, ys, obs).min()) - body_radius)
    return worst


@dataclass(frozen=True)
class GoalSpec:
    """Optional terminal-state term added to the stage objective."""

    enabled: bool = False
    state: tuple[float, float, float] = (0.0, 0.0, 0.0)
    alpha: float = 1.0
    heading_weight: float = 0.0

    def __post_init__(self):
        if self.alpha < 0.0:
            raise ValueError(f"goal weight must be nonnegative, got {self.alpha}")
        if self.heading_weight < 0.0:
            raise ValueError(f"heading weight must be nonnegative, got {self.heading_weight}")


@dataclass(frozen=True)
class RobotSpec:
    start: tuple[float, float, float]
    footprint: Footprint
    body_radius: float = 0.0
    v_bounds: tuple[float, float] = (0.1, 5.0)
    w_bounds: tuple[float, float] = (-0.2, 0.2)

    def __post_init__(self):
        if self.body_radius < 0.0:
            raise ValueError(f"body radius must be nonnegative, got {self.body_radius}")
        InputBounds(self.v_bounds[0], self.v_bounds[1],
                    self.w_bounds[0], self.w_bounds[1])

    def input_bounds(self) -> InputBounds:
        return InputBounds(self.v_bounds[0], self.v_bounds[1],
                           self.w_bounds[0], self.w_bounds[1])

    def start_state(self) -> RobotState:
        return RobotState(*self.start)


@dataclass(frozen=True)
class MissionConfig:
    domain: DomainSpec
    robots: tuple[RobotSpec, ...]
    density_gmm: Optional[tuple[GmmComponent, ...]] = None
    density_file: Optional[str] = None
    obstacles: tuple[Obstacle, ...] = ()
    objective: str = "kl"
    stages: int = 20
    horizon: float = 50.0
    primitives: int = 5
    dt: float = 0.1
    k_max: int = 10
    goal: GoalSpec = GoalSpec()
    cem: cem.CemConfig = cem.CemConfig()
    output: Optional[str] = None

    def __post_init__(self):
        if not self.robots:
            raise ValueError("mission needs at least one robot")
        if (self.density_gmm is None) == (self.density_file is None):
            raise ValueError("provide exactly one of density_gmm or density_file")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        if self.stages < 1:
            raise ValueError(f"stage count must be >= 1, got {self.stages}")
        if self.horizon <= 0.0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.primitives < 1:
            raise ValueError(f"primitive count must be >= 1, got {self.primitives}")
        if self.dt <= 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.k_max < 0:
            raise ValueError(f"k_max must be nonnegative, got {self.k_max}")

    @property
    def tau(self) -> float:
        return self.horizon / self.primitives


def resolve_density(config: MissionConfig) -> DensityGrid:
    """Build the target coverage pdf and floor it away from zero (the KL
    objective needs a strictly positive reference)."""
    if config.density_gmm is not None:
        raw = build_gmm_density(config.domain, config.density_gmm)
    else:
        raw = read_density(config.density_file)
        if raw.domain != config.domain:
            raise ValueError(f"density file domain {raw.domain} does not match "
                             f"mission domain {config.domain}")
    return epsilon_floor(raw)


@dataclass(frozen=True)
class StageContext:
    """Frozen snapshot shared by every candidate evaluation of one stage."""

    states: tuple[RobotState, ...]
    accumulator: StatsAccumulator
    xi: DensityGrid
    xi_coeffs: CoeffSet
    obstacles: tuple[Obstacle, ...] = ()
    past_trajectories: tuple[Trajectory, ...] = ()

    def __post_init__(self):
        if self.accumulator.domain != self.xi.domain:
            raise ValueError("accumulator and density domains differ")


@dataclass(frozen=True)
class StageDiagnostics:
    best_cost: float
    iterations: int
    constraint_min: float
    feasible: bool
    history: tuple = ()


class StageEvaluator:
    """Stage cost for one robot: rollout, coverage objective, goal term,
    and the infeasibility penalty. Pure given the frozen context."""

    def __init__(self, ctx: StageContext, robot_index: int, config: MissionConfig):
        robot = config.robots[robot_index]
        self.q0 = ctx.states[robot_index]
        self.bounds = robot.input_bounds()
        self.tau = config.tau
        self.dt = config.dt
        self.m = config.primitives
        self.domain = ctx.xi.domain
        self.obstacles = ctx.obstacles
        self.body_radius = robot.body_radius
        self.footprint = robot.footprint
        self.objective = config.objective
        self.goal = config.goal
        self.k_max = config.k_max
        if config.objective == "kl":
            self.base_mass = ctx.accumulator.mass
            self.log_xi = np.log(ctx.xi.values)
            self.cell_area = self.domain.cell_area
        else:
            self.xi_coeffs = ctx.xi_coeffs
            self.past = ctx.past_trajectories

    def params(self, raw) -> ParamVector:
        return clamp_params(raw, self.bounds, self.tau)

    def rollout(self, pv: ParamVector) -> Trajectory:
        return rollout(self.q0, pv, self.dt)

    def trajectory_cost(self, traj: Trajectory) -> float:
        if self.objective == "kl":
            cost = self._kl_objective(traj)
        else:
            cost = self._ergodic_objective(traj)
        if self.goal.enabled:
            ex, ey, eth = traj.states[-1]
            gx, gy, gth = self.goal.state
            err = math.hypot(ex - gx, ey - gy)
            if self.goal.heading_weight > 0.0:
                err += self.goal.heading_weight * abs(wrap_angle(eth - gth))
            cost += self.goal.alpha * err
        worst = constraint_min(traj, self.body_radius, self.obstacles, self.domain)
        if worst < 0.0:
            cost += PENALTY_OFFSET + PENALTY_PER_METER * (-worst)
        return float(cost)

    def _kl_objective(self, traj: Trajectory) -> float:
        states = traj.states
        cand = sample_mass(self.footprint, states[:-1, 0], states[:-1, 1],
                           states[:-1, 2], traj.dt, self.domain, skip_outside=True)
        gamma_vals = _pdf_values(self.base_mass + cand, self.cell_area)
        return _kl_sum(gamma_vals, self.log_xi, self.cell_area)

    def _ergodic_objective(self, traj: Trajectory) -> float:
        # time-average coefficients over everything flown so far plus the
        # candidate, recomputed per candidate (point positions, footprints
        # enter the grid pathway only)
        integral = np.zeros((self.k_max + 1, self.k_max + 1))
        total_time = 0.0
        for tr in self.past:
            states = tr.states
            integral += position_integral(states[:-1, 0], states[:-1, 1], tr.dt,
                                          self.domain, self.k_max)
            total_time += tr.duration
        states = traj.states
        integral += position_integral(states[:-1, 0], states[:-1, 1], traj.dt,
                                      self.domain, self.k_max, skip_outside=True)
        total_time += traj.duration
        coeffs = CoeffSet(self.k_max, integral / total_time)
        return ergodicity_metric(coeffs, self.xi_coeffs)

    def __call__(self, raw) -> float:
        return self.trajectory_cost(self.rollout(self.params(raw)))


def stage_cost(z, ctx: StageContext, robot_index: int, config: MissionConfig) -> float:
    """Cost of one parameter vector for one robot in the given context."""
    return StageEvaluator(ctx, robot_index, config)(np.asarray(z, dtype=float))


def plan_stage(ctx: StageContext, robot_index: int, config: MissionConfig,
               rng: np.random.Generator | None = None):
    """Optimize one robot's next horizon; returns (trajectory, diagnostics).

    Runs the optimizer with fresh box-covering starts until it produces a
    feasible incumbent (or the attempt budget runs out), then polishes with
    one restart centered on the incumbent. An infeasible winner is flagged
    in the diagnostics but still returned; the caller decides what to do
    with it.
    """
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(config.cem.seed))
    ev = StageEvaluator(ctx, robot_index, config)
    lo = ev.bounds.lower(config.primitives)
    hi = ev.bounds.upper(config.primitives)
    span = hi - lo
    best_z = None
    best_cost = math.inf
    history: list[tuple[int, float, float, float]] = []
    refined = False
    for _attempt in range(STAGE_ATTEMPTS):
        if best_z is None or best_cost >= PENALTY_OFFSET:
            init = cem.initial_params(lo, hi, config.cem.components)
        elif not refined:
            cov = np.diag((span / REFINE_SHRINK) ** 2 + 1e-12)
            init = cem.GmmParams(np.repeat(best_z[None], config.cem.components, axis=0),
                                 np.repeat(cov[None], config.cem.components, axis=0),
                                 np.full(config.cem.components,
                                         1.0 / config.cem.components))
            refined = True
        else:
            break
        z, cost, rows = cem.optimize(ev, init, config.cem, (lo, hi), rng=rng)
        base = len(history)
        history.extend((base + i, *row[1:]) for i, row in enumerate(rows))
        if cost < best_cost:
            best_z, best_cost = z, cost
    traj = ev.rollout(ev.params(best_z))
    worst = constraint_min(traj, ev.body_radius, ctx.obstacles, ev.domain)
    diag = StageDiagnostics(best_cost=best_cost, iterations=len(history),
                            constraint_min=worst, feasible=worst >= 0.0,
                            history=tuple(history))
    return traj, diag


@dataclass
class MetricsRow:
    stage: int
    robot: int
    phi: float
    kl: float
    bhattacharyya: float
    best_cost: float
    constraint_min: float
    wall_ms: float


@dataclass
class MissionResult:
    config: MissionConfig
    xi: DensityGrid
    accumulator: StatsAccumulator
    trajectories: list  # [robot][stage]
    metrics: list
    diagnostics: list
    error: Optional[str] = None

    def gamma(self) -> DensityGrid:
        return to_pdf(self.accumulator)


def plan_mission(config: MissionConfig, seed: Optional[int] = None) -> MissionResult:
    """Run the full staged mission, robots in config order within a stage.

    Every robot plans against the shared statistics (all past stages plus
    the robots already planned this stage), then commits its trajectory and
    advances to its endpoint. Metrics are recorded after each commitment.
    A stage error aborts the mission; partial results are returned with the
    error recorded.
    """
    if seed is None:
        seed = config.cem.seed
    xi = resolve_density(config)
    xi_coeffs = density_coeffs(xi, config.k_max)
    n_robots = len(config.robots)
    streams = np.random.SeedSequence(seed).spawn(config.stages * n_robots)

    acc = StatsAccumulator.empty(config.domain)
    states = [r.start_state() for r in config.robots]
    past: list[Trajectory] = []
    trajectories: list[list[Trajectory]] = [[] for _ in range(n_robots)]
    metrics: list[MetricsRow] = []
    diagnostics: list[StageDiagnostics] = []
    error = None

    for s in range(config.stages):
        for j in range(n_robots):
            tic = time.perf_counter()
            try:
                ctx = StageContext(tuple(states), acc, xi, xi_coeffs,
                                   config.obstacles, tuple(past))
                rng = np.random.Generator(np.random.PCG64(streams[s * n_robots + j]))
                traj, diag = plan_stage(ctx, j, config, rng=rng)
                acc = accumulate(acc, traj, config.robots[j].footprint)
            except Exception as exc:  # abort with partials
                error = f"stage {s + 1} robot {j}: {exc}"
                break
            wall_ms = (time.perf_counter() - tic) * 1e3
            past.append(traj)
            trajectories[j].append(traj)
            states[j] = traj.final_state()
            diagnostics.append(diag)
            gamma = to_pdf(acc)
            metrics.append(MetricsRow(
                stage=s + 1, robot=j,
                phi=ergodicity_metric(density_coeffs(gamma, config.k_max), xi_coeffs),
                kl=kl_divergence(gamma, xi),
                bhattacharyya=bhattacharyya(gamma, xi),
                best_cost=diag.best_cost,
                constraint_min=diag.constraint_min,
                wall_ms=wall_ms))
        if error is not None:
            break

    return MissionResult(config, xi, acc, trajectories, metrics, diagnostics, error)
