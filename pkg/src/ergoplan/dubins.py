"""Unicycle kinematics with constant-control primitives.

Trajectories are chains of m primitives, each holding a forward speed v and
a turn rate w for a fixed duration tau. Integration is closed form (straight
segment or circular arc), so there is no accumulation error inside a
primitive and primitive endpoints are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Below this turn rate the arc radius v/w overflows usefully; the straight
# branch plus the exact heading update keeps position error under 1e-8 m
# for primitive durations up to 100 s.
STRAIGHT_W_THRESHOLD = 1e-9


def wrap_angle(theta: float) -> float:
    """Wrap to (-pi, pi] using atan2 so negation symmetry is exact."""
    return math.atan2(math.sin(theta), math.cos(theta))


@dataclass(frozen=True)
class RobotState:
    """Planar pose (x, y, theta); theta is wrapped to (-pi, pi]."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)
                and math.isfinite(self.theta)):
            raise ValueError(f"state must be finite, got {(self.x, self.y, self.theta)}")
        object.__setattr__(self, "theta", wrap_angle(self.theta))


@dataclass(frozen=True)
class InputBounds:
    """Box bounds on the forward speed and the turn rate."""

    v_min: float
    v_max: float
    w_min: float
    w_max: float

    def __post_init__(self):
        if self.v_min > self.v_max:
            raise ValueError(f"v_min {self.v_min} > v_max {self.v_max}")
        if self.w_min > self.w_max:
            raise ValueError(f"w_min {self.w_min} > w_max {self.w_max}")

    def lower(self, m: int) -> np.ndarray:
        return np.tile([self.v_min, self.w_min], m)

    def upper(self, m: int) -> np.ndarray:
        return np.tile([self.v_max, self.w_max], m)


@dataclass(frozen=True, eq=False)
class ParamVector:
    """Decision variable (v1, w1, ..., vm, wm) plus bounds and the common
    primitive duration tau."""

    values: np.ndarray
    bounds: InputBounds
    tau: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 2 or vals.size % 2 != 0:
            raise ValueError(f"parameter vector needs an even length >= 2, got {vals.shape}")
        if self.tau <= 0.0:
            raise ValueError(f"primitive duration must be positive, got {self.tau}")
        lo = self.bounds.lower(vals.size // 2)
        hi = self.bounds.upper(vals.size // 2)
        if np.any(vals < lo - 1e-12) or np.any(vals > hi + 1e-12):
            raise ValueError("parameter vector violates its bounds")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def m(self) -> int:
        return self.values.size // 2

    @property
    def speeds(self) -> np.ndarray:
        return self.values[0::2]

    @property
    def turn_rates(self) -> np.ndarray:
        return self.values[1::2]


def clamp_params(raw, bounds: InputBounds, tau: float) -> ParamVector:
    """Clamp a raw vector entrywise into the input box."""
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 1 or raw.size % 2 != 0:
        raise ValueError(f"raw parameter vector needs an even length, got {raw.shape}")
    m = raw.size // 2
    clipped = np.clip(raw, bounds.lower(m), bounds.upper(m))
    return ParamVector(clipped, bounds, tau)


def primitive_step(q: RobotState, v: float, w: float, dt: float) -> RobotState:
    """Advance one constant-control segment by dt (exact closed form)."""
    if dt < 0.0:
        raise ValueError(f"dt must be nonnegative, got {dt}")
    theta1 = q.theta + w * dt
    if abs(w) >= STRAIGHT_W_THRESHOLD:
        r = v / w
        x = q.x + r * (math.sin(theta1) - math.sin(q.theta))
        y = q.y + r * (math.cos(q.theta) - math.cos(theta1))
    else:
        x = q.x + v * dt * math.cos(q.theta)
        y = q.y + v * dt * math.sin(q.theta)
    return RobotState(x, y, theta1)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniformly sampled states with the controls that produced them.

    Sample k > 0 carries the control active on ((k-1) dt, k dt]; sample 0
    carries the first primitive's control. The duration is m * tau, exact.
    """

    t: np.ndarray
    states: np.ndarray
    v: np.ndarray
    w: np.ndarray
    dt: float
    duration: float

    def __post_init__(self):
        for name in ("t", "states", "v", "w"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        n = self.t.size
        if self.states.shape != (n, 3) or self.v.size != n or self.w.size != n:
            raise ValueError("trajectory arrays disagree in length")

    @property
    def n_samples(self) -> int:
        return self.t.size

    @property
    def positions(self) -> np.ndarray:
        return self.states[:, :2]

    def final_state(self) -> RobotState:
        x, y, th = self.states[-1]
        return RobotState(float(x), float(y), float(th))


def _segment_samples(q: RobotState, v: float, w: float, dts: np.ndarray):
    """Closed-form states at offsets dts from the segment start."""
    theta = q.theta + w * dts
    sin_t = np.sin(theta)
    cos_t = np.cos(theta)
    if abs(w) >= STRAIGHT_W_THRESHOLD:
        r = v / w
        x = q.x + r * (sin_t - math.sin(q.theta))
        y = q.y + r * (math.cos(q.theta) - cos_t)
    else:
        x = q.x + v * dts * math.cos(q.theta)
        y = q.y + v * dts * math.sin(q.theta)
    return x, y, np.arctan2(sin_t, cos_t)


def rollout(q0: RobotState, z: ParamVector, dt: float) -> Trajectory:
    """Concatenate the primitives of z into a sampled trajectory.

    dt must divide tau evenly. Each primitive is sampled from its own start
    state, and the start of the next primitive is the exact closed-form
    endpoint, so the final state equals folding :func:`primitive_step` over
    the primitives with dt = tau.
    """
    if dt <= 0.0:
        raise ValueError(f"sample step must be positive, got {dt}")
    ratio = z.tau / dt
    per = int(round(ratio))
    if per < 1 or abs(ratio - per) > 1e-9:
        raise ValueError(f"dt {dt} does not divide primitive duration {z.tau}")

    m = z.m
    n = m * per + 1
    states = np.empty((n, 3))
    v_out = np.empty(n)
    w_out = np.empty(n)
    states[0] = (q0.x, q0.y, q0.theta)
    v_out[0] = z.speeds[0]
    w_out[0] = z.turn_rates[0]

    q = q0
    offsets = np.arange(1, per) * dt
    for i in range(m):
        v, w = float(z.speeds[i]), float(z.turn_rates[i])
        lo = 1 + i * per
        if per > 1:
            x, y, th = _segment_samples(q, v, w, offsets)
            states[lo:lo + per - 1, 0] = x
            states[lo:lo + per - 1, 1] = y
            states[lo:lo + per - 1, 2] = th
        q = primitive_step(q, v, w, z.tau)
        states[lo + per - 1] = (q.x, q.y, q.theta)
        v_out[lo:lo + per] = v
        w_out[lo:lo + per] = w

    return Trajectory(np.arange(n) * dt, states, v_out, w_out, dt, m * z.tau)
