"""Cosine basis on the rectangle and the spectral coverage metric.

The basis functions are products of axis cosines with zero normal derivative
at the domain boundary, scaled to unit L2 norm. Coefficient sets compare a
trajectory's time-average statistics against a target density in mode space.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import DensityGrid, DomainSpec

# Mode weights are (1 + |k|)^(-LAMBDA_EXPONENT) with |k| the Euclidean norm
# of the integer index pair; exponent is (d + 1) / 2 for d = 2. Switch the
# norm here (e.g. to ord=1) to change the low-frequency emphasis globally.
LAMBDA_EXPONENT = 1.5
INDEX_NORM_ORD = 2


@dataclass(frozen=True, eq=False)
class CoeffSet:
    """Coefficients c[k1, k2] for every index in the (k_max+1)^2 box."""

    k_max: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        n = self.k_max + 1
        if vals.shape != (n, n):
            raise ValueError(f"coefficient shape {vals.shape} != {(n, n)}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("coefficients must be finite")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)


def basis_norms(domain: DomainSpec, k_max: int) -> np.ndarray:
    """Normalization h[k1, k2] making every basis function unit L2 norm."""
    L1, L2 = domain.lengths
    a = np.full(k_max + 1, 0.5)
    a[0] = 1.0
    return np.sqrt(L1 * L2 * np.outer(a, a))


@lru_cache(maxsize=8)
def mode_weights(k_max: int) -> np.ndarray:
    k = np.arange(k_max + 1, dtype=float)
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    if INDEX_NORM_ORD == 2:
        norm = np.hypot(k1, k2)
    else:
        norm = np.abs(k1) + np.abs(k2)
    w = (1.0 + norm) ** (-LAMBDA_EXPONENT)
    w.flags.writeable = False
    return w


def basis_eval(k: tuple[int, int], x: tuple[float, float], domain: DomainSpec) -> float:
    """Evaluate basis function k at a point of the closed domain."""
    k1, k2 = k
    if k1 < 0 or k2 < 0:
        raise ValueError(f"basis index must be nonnegative, got {k}")
    if not domain.contains(x[0], x[1]):
        raise ValueError(f"point {x} outside domain {domain.lengths}")
    L1, L2 = domain.lengths
    h = basis_norms(domain, max(k1, k2))[k1, k2]
    return float(np.cos(k1 * np.pi * x[0] / L1) * np.cos(k2 * np.pi * x[1] / L2) / h)


def _axis_cos(coords: np.ndarray, length: float, k_max: int) -> np.ndarray:
    """Table cos(k * pi * c / L), shape (k_max + 1, len(coords))."""
    k = np.arange(k_max + 1, dtype=float)
    return np.cos(np.outer(k, coords) * (np.pi / length))


def density_coeffs(xi: DensityGrid, k_max: int) -> CoeffSet:
    """Project a grid density onto the basis by midpoint quadrature."""
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    domain = xi.domain
    xs, ys = domain.cell_centers()
    cx = _axis_cos(xs, domain.lengths[0], k_max)
    cy = _axis_cos(ys, domain.lengths[1], k_max)
    # xi.values is indexed [j, i]; contract y first, then x
    raw = cx @ xi.values.T @ cy.T
    raw *= domain.cell_area
    raw /= basis_norms(domain, k_max)
    return CoeffSet(k_max, raw)


def position_integral(xs, ys, dt: float, domain: DomainSpec, k_max: int,
                      skip_outside: bool = False) -> np.ndarray:
    """Unnormalized integral sum_s f_k(p_s) * dt over sample positions.

    With skip_outside, samples off the domain contribute nothing (their
    observation time is lost); otherwise they raise.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    L1, L2 = domain.lengths
    inside = (xs >= 0.0) & (xs <= L1) & (ys >= 0.0) & (ys <= L2)
    if not inside.all():
        if not skip_outside:
            bad = int(np.argmin(inside))
            raise ValueError(f"trajectory sample ({xs[bad]}, {ys[bad]}) outside "
                             f"domain {domain.lengths}")
        xs = xs[inside]
        ys = ys[inside]
    cx = _axis_cos(xs, L1, k_max)
    cy = _axis_cos(ys, L2, k_max)
    return (cx @ cy.T) * (dt / basis_norms(domain, k_max))


def trajectory_coeffs(trajectories, k_max: int, domain: DomainSpec) -> CoeffSet:
    """Coefficients of the combined time-average statistics of one or more
    trajectories (point positions, left-Riemann time quadrature).

    Multiple robots share a common time base, so the result is the total
    basis integral divided by the total accumulated duration.
    """
    trajs = list(trajectories)
    if not trajs:
        raise ValueError("at least one trajectory is required")
    integral = np.zeros((k_max + 1, k_max + 1))
    total_time = 0.0
    for traj in trajs:
        states = traj.states
        integral += position_integral(states[:-1, 0], states[:-1, 1],
                                      traj.dt, domain, k_max)
        total_time += traj.duration
    if total_time <= 0.0:
        raise ValueError("total trajectory duration must be positive")
    return CoeffSet(k_max, integral / total_time)


def ergodicity_metric(traj_coeffs: CoeffSet, density_coeffs: CoeffSet) -> float:
    """Weighted squared distance between two coefficient sets (>= 0)."""
    if traj_coeffs.k_max != density_coeffs.k_max:
        raise ValueError(f"coefficient sets differ in k_max: "
                         f"{traj_coeffs.k_max} vs {density_coeffs.k_max}")
    diff = traj_coeffs.values - density_coeffs.values
    return float((mode_weights(traj_coeffs.k_max) * diff * diff).sum())
