"""Sensor footprint models and accumulation of time-average sensing mass.

A footprint turns one robot pose into a weight field over grid cells: a
point sensor puts all weight in the containing cell, a Gaussian sensor
spreads a pdf around the position, and a beam sensor marks the cells of a
directed circular sector. Accumulators integrate those weights over
trajectory samples and normalize into a coverage pdf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .grid import DensityGrid, DomainSpec, normalize

# Gaussian weights are evaluated inside a +-4 sigma box per axis; the
# neglected tail mass is below 1e-4.
GAUSSIAN_CUTOFF_SIGMAS = 4.0


@dataclass(frozen=True)
class DiracFootprint:
    """Point sensor: all weight in the cell containing the position."""


@dataclass(frozen=True)
class GaussianFootprint:
    """Gaussian sensor blob with a fixed 2x2 SPD covariance (m^2)."""

    covariance: tuple[tuple[float, float], tuple[float, float]]

    def __post_init__(self):
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (2, 2):
            raise ValueError(f"covariance must be 2x2, got shape {cov.shape}")
        if abs(cov[0, 1] - cov[1, 0]) > 1e-12 * max(1.0, abs(cov[0, 1])):
            raise ValueError("covariance must be symmetric")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ValueError(f"covariance {self.covariance} is not positive-definite") from None

    def cov_array(self) -> np.ndarray:
        return np.asarray(self.covariance, dtype=float)


@dataclass(frozen=True)
class BeamFootprint:
    """Forward-looking sector of radius r and view angle beta around the
    robot heading, weight 1 inside and 0 outside."""

    radius: float
    view_angle: float

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError(f"beam radius must be positive, got {self.radius}")
        if not (0.0 < self.view_angle <= 2.0 * math.pi):
            raise ValueError(f"view angle must be in (0, 2*pi], got {self.view_angle}")


Footprint = Union[DiracFootprint, GaussianFootprint, BeamFootprint]


@dataclass(frozen=True, eq=False)
class StatsAccumulator:
    """Unnormalized sensing mass per cell plus the accumulated time.

    Immutable snapshot; accumulation returns a new value, so snapshots can
    be shared freely across parallel cost evaluations.
    """

    domain: DomainSpec
    mass: np.ndarray
    total_time: float
    contributions: int

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=float)
        n1, n2 = self.domain.resolution
        if mass.shape != (n2, n1):
            raise ValueError(f"mass shape {mass.shape} does not match resolution")
        if np.any(mass < 0.0):
            raise ValueError("accumulated mass must be nonnegative")
        if self.total_time < 0.0:
            raise ValueError("total_time must be nonnegative")
        mass = mass.copy()
        mass.flags.writeable = False
        object.__setattr__(self, "mass", mass)

    @classmethod
    def empty(cls, domain: DomainSpec) -> "StatsAccumulator":
        n1, n2 = domain.resolution
        return cls(domain, np.zeros((n2, n1)), 0.0, 0)


def sample_mass(spec: Footprint, xs, ys, thetas, dt: float,
                domain: DomainSpec, skip_outside: bool = False) -> np.ndarray:
    """Mass field contributed by samples observed for dt seconds each.

    Footprints are clipped at the domain boundary without renormalization.
    With skip_outside, samples whose position is off the domain contribute
    nothing; otherwise they raise.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    n1, n2 = domain.resolution
    L1, L2 = domain.lengths
    inside = (xs >= 0.0) & (xs <= L1) & (ys >= 0.0) & (ys <= L2)
    if not inside.all():
        if not skip_outside:
            bad = int(np.argmin(inside))
            raise ValueError(f"sample position ({xs[bad]}, {ys[bad]}) outside "
                             f"domain {domain.lengths}")
        xs, ys, thetas = xs[inside], ys[inside], thetas[inside]
    out = np.zeros(n1 * n2)
    if xs.size:
        if isinstance(spec, DiracFootprint):
            _stamp_dirac(out, xs, ys, dt, domain)
        elif isinstance(spec, GaussianFootprint):
            _stamp_gaussian(out, spec, xs, ys, dt, domain)
        elif isinstance(spec, BeamFootprint):
            _stamp_beam(out, spec, xs, ys, thetas, dt, domain)
        else:
            raise TypeError(f"unknown footprint {spec!r}")
    return out.reshape(n2, n1)


def _stamp_dirac(out, xs, ys, dt, domain):
    n1, n2 = domain.resolution
    cw, ch = domain.cell_size
    ix = np.minimum((xs / cw).astype(np.intp), n1 - 1)
    iy = np.minimum((ys / ch).astype(np.intp), n2 - 1)
    counts = np.bincount(iy * n1 + ix, minlength=n1 * n2)
    out += counts * (dt / domain.cell_area)


def _axis_window(coords, reach, cell, count):
    """Per-sample index window and center offsets along one axis."""
    i0 = np.ceil((coords - reach) / cell - 0.5).astype(np.intp)
    span = int(math.floor(2.0 * reach / cell)) + 2
    idx = i0[:, None] + np.arange(span)
    offs = (idx + 0.5) * cell - coords[:, None]
    valid = (np.abs(offs) <= reach) & (idx >= 0) & (idx < count)
    return idx, offs, valid


def _stamp_gaussian(out, spec, xs, ys, dt, domain):
    n1, n2 = domain.resolution
    cw, ch = domain.cell_size
    cov = spec.cov_array()
    sx, sy = math.sqrt(cov[0, 0]), math.sqrt(cov[1, 1])
    ix, dx, okx = _axis_window(xs, GAUSSIAN_CUTOFF_SIGMAS * sx, cw, n1)
    iy, dy, oky = _axis_window(ys, GAUSSIAN_CUTOFF_SIGMAS * sy, ch, n2)
    if cov[0, 1] == 0.0:
        # separable evaluation, exact for a diagonal covariance
        gx = np.where(okx, np.exp(-0.5 * (dx / sx) ** 2), 0.0) / (sx * math.sqrt(2.0 * math.pi))
        gy = np.where(oky, np.exp(-0.5 * (dy / sy) ** 2), 0.0) / (sy * math.sqrt(2.0 * math.pi))
        weights = gy[:, :, None] * gx[:, None, :]
    else:
        det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
        a = cov[1, 1] / det
        b = -cov[0, 1] / det
        c = cov[0, 0] / det
        qx = dx[:, None, :]
        qy = dy[:, :, None]
        quad = a * qx * qx + 2.0 * b * qx * qy + c * qy * qy
        weights = np.exp(-0.5 * quad) / (2.0 * math.pi * math.sqrt(det))
        weights *= oky[:, :, None] & okx[:, None, :]
    flat = iy[:, :, None] * n1 + ix[:, None, :]
    ok = oky[:, :, None] & okx[:, None, :]
    out += np.bincount(np.where(ok, flat, 0).ravel(),
                       weights=(weights * dt * ok).ravel(), minlength=out.size)


def _stamp_beam(out, spec, xs, ys, thetas, dt, domain):
    n1, n2 = domain.resolution
    cw, ch = domain.cell_size
    r = spec.radius
    half = 0.5 * spec.view_angle
    ix, dx, okx = _axis_window(xs, r, cw, n1)
    iy, dy, oky = _axis_window(ys, r, ch, n2)
    qx = dx[:, None, :]
    qy = dy[:, :, None]
    within = (qx * qx + qy * qy) <= r * r
    # wrapped angular offset from the heading, in (-pi, pi]
    ang = np.arctan2(qy, qx) - thetas[:, None, None]
    ang = np.arctan2(np.sin(ang), np.cos(ang))
    mask = within & (np.abs(ang) <= half) & oky[:, :, None] & okx[:, None, :]
    flat = iy[:, :, None] * n1 + ix[:, None, :]
    out += np.bincount(np.where(mask, flat, 0).ravel(),
                       weights=np.where(mask, dt, 0.0).ravel(), minlength=out.size)


def footprint_weights(spec: Footprint, state, domain: DomainSpec) -> dict:
    """Cell weights {(i, j): w} for a single robot pose.

    Raises when the position is outside the domain. The map is sparse:
    cells with zero weight are absent.
    """
    x, y, theta = state
    if not domain.contains(x, y):
        raise ValueError(f"position ({x}, {y}) outside domain {domain.lengths}")
    field = sample_mass(spec, [x], [y], [theta], 1.0, domain)
    jj, ii = np.nonzero(field)
    return {(int(i), int(j)): float(field[j, i]) for i, j in zip(ii, jj)}


def accumulate(acc: StatsAccumulator, traj, spec: Footprint) -> StatsAccumulator:
    """Add one trajectory's sensing mass (left-Riemann in time).

    Pure: returns a new accumulator, the input is unchanged. The trajectory
    must lie inside the accumulator's domain.
    """
    states = traj.states
    added = sample_mass(spec, states[:-1, 0], states[:-1, 1], states[:-1, 2],
                        traj.dt, acc.domain)
    return StatsAccumulator(acc.domain, acc.mass + added,
                            acc.total_time + traj.duration,
                            acc.contributions + 1)


def to_pdf(acc: StatsAccumulator) -> DensityGrid:
    """Normalize the accumulated mass into a coverage pdf."""
    if acc.total_time <= 0.0:
        raise ValueError("accumulator holds no observation time")
    return normalize(acc.mass, acc.domain)
