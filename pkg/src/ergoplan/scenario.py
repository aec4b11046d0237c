"""Scenario files: a strict YAML schema for mission configuration.

Every key is validated; unknown keys are rejected by name so typos cannot
silently fall back to defaults. Loading applies documented defaults for
every tunable, and the resolved configuration can be dumped back out as a
scenario that reloads to an identical MissionConfig.
"""

from __future__ import annotations

import math

import yaml

from .cem import CemConfig
from .footprint import BeamFootprint, DiracFootprint, GaussianFootprint
from .grid import DomainSpec, GmmComponent
from .planner import (CircleObstacle, GoalSpec, MissionConfig, PolygonObstacle,
                      RobotSpec)


class ScenarioError(ValueError):
    """Malformed scenario file; the message names the offending key."""


DEFAULT_DOMAIN = DomainSpec((100.0, 100.0), (100, 100))

_TOP_KEYS = {"domain", "density", "robots", "obstacles", "objective", "stages",
             "horizon", "primitives", "dt", "k_max", "goal", "cem", "output"}
_DOMAIN_KEYS = {"lengths", "resolution"}
_DENSITY_KEYS = {"gmm", "grid_file"}
_COMPONENT_KEYS = {"mean", "covariance", "weight"}
_ROBOT_KEYS = {"start", "footprint", "body_radius", "v_bounds", "w_bounds"}
_FOOTPRINT_KEYS = {"type", "covariance", "radius", "view_angle"}
_OBSTACLE_KEYS = {"type", "center", "radius", "vertices"}
_GOAL_KEYS = {"enabled", "state", "alpha", "heading_weight"}
_CEM_KEYS = {"samples", "elite_frac", "max_iters", "var_floor", "converge_eig",
             "seed", "components"}


def _mapping(obj, where):
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected a key-value section")
    return obj


def _check_keys(mapping, allowed, where):
    unknown = set(mapping) - allowed
    if unknown:
        raise ScenarioError(f"{where}: unknown key {sorted(unknown)[0]!r}")


def _number(obj, where):
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {obj!r}")
    if not math.isfinite(float(obj)):
        raise ScenarioError(f"{where}: value must be finite")
    return float(obj)


def _integer(obj, where):
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise ScenarioError(f"{where}: expected an integer, got {obj!r}")
    return obj


def _tuple_of(obj, n, where):
    if not isinstance(obj, (list, tuple)) or len(obj) != n:
        raise ScenarioError(f"{where}: expected a list of {n} numbers")
    return tuple(_number(v, where) for v in obj)


def _matrix2(obj, where):
    if not isinstance(obj, (list, tuple)) or len(obj) != 2:
        raise ScenarioError(f"{where}: expected a 2x2 matrix as two rows")
    return tuple(_tuple_of(row, 2, where) for row in obj)


def _wrap(where, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def _parse_domain(obj) -> DomainSpec:
    sec = _mapping(obj, "domain")
    _check_keys(sec, _DOMAIN_KEYS, "domain")
    lengths = _tuple_of(sec.get("lengths", [100.0, 100.0]), 2, "domain.lengths")
    res = sec.get("resolution", [100, 100])
    if not isinstance(res, (list, tuple)) or len(res) != 2:
        raise ScenarioError("domain.resolution: expected a list of 2 integers")
    resolution = tuple(_integer(v, "domain.resolution") for v in res)
    return _wrap("domain", DomainSpec, lengths, resolution)


def _parse_component(obj, where) -> GmmComponent:
    sec = _mapping(obj, where)
    _check_keys(sec, _COMPONENT_KEYS, where)
    for key in _COMPONENT_KEYS:
        if key not in sec:
            raise ScenarioError(f"{where}: missing required key {key!r}")
    return _wrap(where, GmmComponent,
                 _tuple_of(sec["mean"], 2, f"{where}.mean"),
                 _matrix2(sec["covariance"], f"{where}.covariance"),
                 _number(sec["weight"], f"{where}.weight"))


def _parse_density(obj):
    sec = _mapping(obj, "density")
    _check_keys(sec, _DENSITY_KEYS, "density")
    has_gmm = "gmm" in sec
    has_file = "grid_file" in sec
    if has_gmm == has_file:
        raise ScenarioError("density: provide exactly one of 'gmm' or 'grid_file'")
    if has_file:
        if not isinstance(sec["grid_file"], str):
            raise ScenarioError("density.grid_file: expected a path string")
        return None, sec["grid_file"]
    comps = sec["gmm"]
    if not isinstance(comps, list) or not comps:
        raise ScenarioError("density.gmm: expected a non-empty list of components")
    return tuple(_parse_component(c, f"density.gmm[{i}]")
                 for i, c in enumerate(comps)), None


def _parse_footprint(obj, where):
    sec = _mapping(obj, where)
    _check_keys(sec, _FOOTPRINT_KEYS, where)
    kind = sec.get("type")
    if kind == "dirac":
        _check_keys(sec, {"type"}, where)
        return DiracFootprint()
    if kind == "gaussian":
        if "covariance" not in sec:
            raise ScenarioError(f"{where}: gaussian footprint needs 'covariance'")
        _check_keys(sec, {"type", "covariance"}, where)
        return _wrap(where, GaussianFootprint,
                     _matrix2(sec["covariance"], f"{where}.covariance"))
    if kind == "beam":
        for key in ("radius", "view_angle"):
            if key not in sec:
                raise ScenarioError(f"{where}: beam footprint needs {key!r}")
        _check_keys(sec, {"type", "radius", "view_angle"}, where)
        return _wrap(where, BeamFootprint,
                     _number(sec["radius"], f"{where}.radius"),
                     _number(sec["view_angle"], f"{where}.view_angle"))
    raise ScenarioError(f"{where}.type: expected dirac, gaussian, or beam, got {kind!r}")


def _parse_robot(obj, where) -> RobotSpec:
    sec = _mapping(obj, where)
    _check_keys(sec, _ROBOT_KEYS, where)
    if "start" not in sec:
        raise ScenarioError(f"{where}: missing required key 'start'")
    start = tuple(_number(v, f"{where}.start") for v in
                  (sec["start"] if isinstance(sec["start"], (list, tuple)) else [None]))
    if len(start) != 3:
        raise ScenarioError(f"{where}.start: expected [x, y, theta]")
    footprint = _parse_footprint(sec.get("footprint", {"type": "dirac"}),
                                 f"{where}.footprint")
    v_bounds = _tuple_of(sec.get("v_bounds", [0.1, 5.0]), 2, f"{where}.v_bounds")
    w_bounds = _tuple_of(sec.get("w_bounds", [-0.2, 0.2]), 2, f"{where}.w_bounds")
    if v_bounds[0] > v_bounds[1]:
        raise ScenarioError(f"{where}.v_bounds: lower bound {v_bounds[0]} exceeds "
                            f"upper bound {v_bounds[1]}")
    if w_bounds[0] > w_bounds[1]:
        raise ScenarioError(f"{where}.w_bounds: lower bound {w_bounds[0]} exceeds "
                            f"upper bound {w_bounds[1]}")
    return _wrap(where, RobotSpec, start, footprint,
                 _number(sec.get("body_radius", 0.0), f"{where}.body_radius"),
                 v_bounds, w_bounds)


def _parse_obstacle(obj, where):
    sec = _mapping(obj, where)
    _check_keys(sec, _OBSTACLE_KEYS, where)
    kind = sec.get("type")
    if kind == "circle":
        for key in ("center", "radius"):
            if key not in sec:
                raise ScenarioError(f"{where}: circle obstacle needs {key!r}")
        _check_keys(sec, {"type", "center", "radius"}, where)
        return _wrap(where, CircleObstacle,
                     _tuple_of(sec["center"], 2, f"{where}.center"),
                     _number(sec["radius"], f"{where}.radius"))
    if kind == "polygon":
        if "vertices" not in sec:
            raise ScenarioError(f"{where}: polygon obstacle needs 'vertices'")
        _check_keys(sec, {"type", "vertices"}, where)
        verts = sec["vertices"]
        if not isinstance(verts, list) or len(verts) < 3:
            raise ScenarioError(f"{where}.vertices: expected at least 3 vertices")
        return _wrap(where, PolygonObstacle,
                     tuple(_tuple_of(v, 2, f"{where}.vertices") for v in verts))
    raise ScenarioError(f"{where}.type: expected circle or polygon, got {kind!r}")


def _parse_goal(obj) -> GoalSpec:
    sec = _mapping(obj, "goal")
    _check_keys(sec, _GOAL_KEYS, "goal")
    if "state" not in sec:
        raise ScenarioError("goal: missing required key 'state'")
    enabled = sec.get("enabled", True)
    if not isinstance(enabled, bool):
        raise ScenarioError("goal.enabled: expected true or false")
    state = _tuple_of(sec["state"], 3, "goal.state")
    return _wrap("goal", GoalSpec, enabled, state,
                 _number(sec.get("alpha", 1.0), "goal.alpha"),
                 _number(sec.get("heading_weight", 0.0), "goal.heading_weight"))


def _parse_cem(obj) -> CemConfig:
    sec = _mapping(obj, "cem")
    _check_keys(sec, _CEM_KEYS, "cem")
    return _wrap("cem", CemConfig,
                 samples=_integer(sec.get("samples", 40), "cem.samples"),
                 elite_frac=_number(sec.get("elite_frac", 0.1), "cem.elite_frac"),
                 max_iters=_integer(sec.get("max_iters", 30), "cem.max_iters"),
                 var_floor=_number(sec.get("var_floor", 1e-6), "cem.var_floor"),
                 converge_eig=_number(sec.get("converge_eig", 1e-3), "cem.converge_eig"),
                 seed=_integer(sec.get("seed", 0), "cem.seed"),
                 components=_integer(sec.get("components", 1), "cem.components"))


def parse_scenario(data: dict) -> MissionConfig:
    """Build a validated MissionConfig from a parsed scenario mapping."""
    sec = _mapping(data, "scenario")
    _check_keys(sec, _TOP_KEYS, "scenario")
    for key in ("density", "robots"):
        if key not in sec:
            raise ScenarioError(f"scenario: missing required key {key!r}")
    domain = _parse_domain(sec.get("domain", {}))
    density_gmm, density_file = _parse_density(sec["density"])
    robots = sec["robots"]
    if not isinstance(robots, list) or not robots:
        raise ScenarioError("robots: expected a non-empty list")
    robot_specs = tuple(_parse_robot(r, f"robots[{i}]") for i, r in enumerate(robots))
    obstacles = sec.get("obstacles", [])
    if not isinstance(obstacles, list):
        raise ScenarioError("obstacles: expected a list")
    obstacle_specs = tuple(_parse_obstacle(o, f"obstacles[{i}]")
                           for i, o in enumerate(obstacles))
    objective = sec.get("objective", "kl")
    if objective not in ("kl", "ergodic"):
        raise ScenarioError(f"objective: expected 'kl' or 'ergodic', got {objective!r}")
    goal = _parse_goal(sec["goal"]) if "goal" in sec else GoalSpec(enabled=False)
    output = sec.get("output")
    if output is not None and not isinstance(output, str):
        raise ScenarioError("output: expected a path string")
    return _wrap("scenario", MissionConfig,
                 domain=domain,
                 robots=robot_specs,
                 density_gmm=density_gmm,
                 density_file=density_file,
                 obstacles=obstacle_specs,
                 objective=objective,
                 stages=_integer(sec.get("stages", 20), "stages"),
                 horizon=_number(sec.get("horizon", 50.0), "horizon"),
                 primitives=_integer(sec.get("primitives", 5), "primitives"),
                 dt=_number(sec.get("dt", 0.1), "dt"),
                 k_max=_integer(sec.get("k_max", 10), "k_max"),
                 goal=goal,
                 cem=_parse_cem(sec.get("cem", {})),
                 output=output)


def load_scenario(path) -> MissionConfig:
    """Load and validate a scenario file."""
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ScenarioError(f"{path}: not valid YAML ({exc})") from None
    if data is None:
        raise ScenarioError(f"{path}: scenario file is empty")
    return parse_scenario(data)


def _footprint_dict(fp) -> dict:
    if isinstance(fp, DiracFootprint):
        return {"type": "dirac"}
    if isinstance(fp, GaussianFootprint):
        return {"type": "gaussian", "covariance": [list(r) for r in fp.covariance]}
    return {"type": "beam", "radius": fp.radius, "view_angle": fp.view_angle}


def _obstacle_dict(obs) -> dict:
    if isinstance(obs, CircleObstacle):
        return {"type": "circle", "center": list(obs.center), "radius": obs.radius}
    return {"type": "polygon", "vertices": [list(v) for v in obs.vertices]}


def scenario_dict(config: MissionConfig) -> dict:
    """Fully resolved scenario mapping: every default spelled out."""
    density = ({"grid_file": config.density_file} if config.density_file is not None
               else {"gmm": [{"mean": list(c.mean),
                              "covariance": [list(r) for r in c.covariance],
                              "weight": c.weight} for c in config.density_gmm]})
    out = {
        "domain": {"lengths": list(config.domain.lengths),
                   "resolution": list(config.domain.resolution)},
        "density": density,
        "robots": [{"start": list(r.start),
                    "footprint": _footprint_dict(r.footprint),
                    "body_radius": r.body_radius,
                    "v_bounds": list(r.v_bounds),
                    "w_bounds": list(r.w_bounds)} for r in config.robots],
        "obstacles": [_obstacle_dict(o) for o in config.obstacles],
        "objective": config.objective,
        "stages": config.stages,
        "horizon": config.horizon,
        "primitives": config.primitives,
        "dt": config.dt,
        "k_max": config.k_max,
        "goal": {"enabled": config.goal.enabled,
                 "state": list(config.goal.state),
                 "alpha": config.goal.alpha,
                 "heading_weight": config.goal.heading_weight},
        "cem": {"samples": config.cem.samples,
                "elite_frac": config.cem.elite_frac,
                "max_iters": config.cem.max_iters,
                "var_floor": config.cem.var_floor,
                "converge_eig": config.cem.converge_eig,
                "seed": config.cem.seed,
                "components": config.cem.components},
    }
    if config.output is not None:
        out["output"] = config.output
    return out


def resolved_text(config: MissionConfig) -> str:
    return yaml.safe_dump(scenario_dict(config), sort_keys=False)


def dump_scenario(config: MissionConfig, path) -> None:
    with open(path, "w") as fh:
        fh.write(resolved_text(config))
