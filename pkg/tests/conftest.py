"""Shared fixtures and independent oracles for the test suite.

The RK4 integrators here are deliberately separate from the closed-form
kinematics they check: they integrate the differential equation directly
at a small step and never call into the package's rollout code.
"""

from __future__ import annotations

import math
import os

import numpy as np
import pytest

from ergoplan import plan_mission
from ergoplan.scenario import load_scenario

SCENARIO_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "scenarios")


def scenario_path(name: str) -> str:
    return os.path.join(SCENARIO_DIR, name)


def rk4_unicycle(q0, controls, tau: float, dt: float, sample_every: int) -> np.ndarray:
    """Classical RK4 integration of (x' = v cos th, y' = v sin th, th' = w)
    with piecewise-constant controls; returns states at every
    sample_every-th step, including the initial state."""
    x, y, th = float(q0[0]), float(q0[1]), float(q0[2])
    out = [(x, y, th)]
    steps = int(round(tau / dt))
    for v, w in controls:
        for k in range(steps):
            c1, s1 = math.cos(th), math.sin(th)
            th2 = th + 0.5 * dt * w
            c2, s2 = math.cos(th2), math.sin(th2)
            th4 = th + dt * w
            c4, s4 = math.cos(th4), math.sin(th4)
            x += dt / 6.0 * v * (c1 + 4.0 * c2 + c4)
            y += dt / 6.0 * v * (s1 + 4.0 * s2 + s4)
            th = th4
            if (k + 1) % sample_every == 0:
                out.append((x, y, th))
    return np.array(out)


def rk4_unicycle_batch(q0, v, w, tau: float, dt: float, sample_every: int) -> np.ndarray:
    """Vectorized variant over a batch of control sequences.

    v and w have shape (batch, m); returns positions (batch, n_samples, 2)
    at every sample_every-th step, including the start.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    batch, m = v.shape
    x = np.full(batch, float(q0[0]))
    y = np.full(batch, float(q0[1]))
    th = np.full(batch, float(q0[2]))
    steps = int(round(tau / dt))
    out = [np.stack([x, y], axis=1)]
    sixth = dt / 6.0
    for p in range(m):
        vv = v[:, p]
        ww = w[:, p]
        for k in range(steps):
            c1 = np.cos(th)
            s1 = np.sin(th)
            th2 = th + 0.5 * dt * ww
            c2 = np.cos(th2)
            s2 = np.sin(th2)
            th4 = th + dt * ww
            c4 = np.cos(th4)
            s4 = np.sin(th4)
            x = x + sixth * vv * (c1 + 4.0 * c2 + c4)
            y = y + sixth * vv * (s1 + 4.0 * s2 + s4)
            th = th4
            if (k + 1) % sample_every == 0:
                out.append(np.stack([x, y], axis=1))
    return np.stack(out, axis=1)


@pytest.fixture(scope="session")
def fig1_config():
    return load_scenario(scenario_path("fig1.yaml"))


@pytest.fixture(scope="session")
def fig1_mission(fig1_config):
    """The full 20-stage reference mission, planned once per session."""
    result = plan_mission(fig1_config)
    assert result.error is None, result.error
    return result
