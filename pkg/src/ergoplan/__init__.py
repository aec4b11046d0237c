"""Ergodic coverage trajectory planning for unicycle robots.

Plan trajectories whose time-average sensing statistics match a target
density over a rectangular domain, using cross-entropy optimization over
constant-control motion primitives, with sensor footprints, obstacle
penalties, multi-robot sequencing, and optional terminal goals.
"""

from .cem import CemConfig, GmmParams, initial_params, optimize
from .dubins import (InputBounds, ParamVector, RobotState, Trajectory,
                     clamp_params, primitive_step, rollout)
from .footprint import (BeamFootprint, DiracFootprint, GaussianFootprint,
                        StatsAccumulator, accumulate, footprint_weights, to_pdf)
from .grid import (DensityGrid, DomainSpec, GmmComponent, bhattacharyya,
                   build_gmm_density, epsilon_floor, kl_divergence, normalize,
                   read_density, write_density)
from .planner import (CircleObstacle, GoalSpec, MetricsRow, MissionConfig,
                      MissionResult, PolygonObstacle, RobotSpec, StageContext,
                      constraint_min, plan_mission, plan_stage, prox, stage_cost)
from .scenario import ScenarioError, dump_scenario, load_scenario
from .spectral import (CoeffSet, basis_eval, density_coeffs, ergodicity_metric,
                       trajectory_coeffs)

__version__ = "0.1.0"
