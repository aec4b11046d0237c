import math

import numpy as np
import pytest

from ergoplan.dubins import Trajectory
from ergoplan.footprint import (BeamFootprint, DiracFootprint, GaussianFootprint,
                                StatsAccumulator, accumulate, footprint_weights,
                                sample_mass, to_pdf)
from ergoplan.grid import DomainSpec, normalize

UNIT10 = DomainSpec((1.0, 1.0), (10, 10))


def still_trajectory(x, y, theta=0.0, duration=10.0, dt=0.1, thetas=None):
    n = int(round(duration / dt)) + 1
    states = np.tile([x, y, theta], (n, 1))
    if thetas is not None:
        states[:, 2] = thetas
    return Trajectory(np.arange(n) * dt, states, np.zeros(n), np.zeros(n), dt, duration)


class TestFootprintSpecs:
    def test_gaussian_rejects_non_spd(self):
        with pytest.raises(ValueError):
            GaussianFootprint(((1.0, 2.0), (2.0, 1.0)))

    def test_beam_rejects_bad_geometry(self):
        with pytest.raises(ValueError):
            BeamFootprint(0.0, 1.0)
        with pytest.raises(ValueError):
            BeamFootprint(1.0, 7.0)


class TestFootprintWeights:
    def test_dirac_single_cell(self):
        w = footprint_weights(DiracFootprint(), (0.55, 0.35, 0.0), UNIT10)
        assert w == {(5, 3): pytest.approx(100.0)}

    def test_gaussian_mass_close_to_one(self):
        dom = DomainSpec((100.0, 100.0), (100, 100))
        spec = GaussianFootprint(((9.0, 0.0), (0.0, 9.0)))
        w = footprint_weights(spec, (50.0, 50.0, 0.0), dom)
        assert sum(w.values()) * dom.cell_area == pytest.approx(1.0, abs=1e-3)

    def test_gaussian_correlated_covariance_mass(self):
        dom = DomainSpec((100.0, 100.0), (200, 200))
        spec = GaussianFootprint(((9.0, 4.0), (4.0, 9.0)))
        w = footprint_weights(spec, (50.0, 50.0, 0.0), dom)
        assert sum(w.values()) * dom.cell_area == pytest.approx(1.0, abs=2e-3)

    def test_beam_sector_area(self):
        dom = DomainSpec((100.0, 100.0), (400, 400))
        spec = BeamFootprint(10.0, math.pi / 3.0)
        w = footprint_weights(spec, (50.0, 50.0, 0.7), dom)
        area = sum(w.values()) * dom.cell_area
        expected = 0.5 * spec.view_angle * spec.radius ** 2
        assert area == pytest.approx(expected, rel=0.02)

    def test_rejects_outside_position(self):
        with pytest.raises(ValueError):
            footprint_weights(DiracFootprint(), (1.2, 0.5, 0.0), UNIT10)

    def test_beam_rotation_is_cell_permutation(self):
        # quarter-turn rotations about the grid center permute the weight
        # map exactly; heading pi/4 keeps cell centers off the sector edges
        dom = DomainSpec((10.0, 10.0), (10, 10))
        spec = BeamFootprint(4.0, math.pi / 2.0)
        maps = [footprint_weights(spec, (5.0, 5.0, math.pi / 4.0 + k * math.pi / 2.0), dom)
                for k in range(4)]

        def rot(cell):
            i, j = cell
            return (9 - j, i)

        for k in range(3):
            rotated = {rot(c): v for c, v in maps[k].items()}
            assert rotated == maps[k + 1]

    def test_gaussian_reflection_symmetry(self):
        dom = DomainSpec((10.0, 10.0), (10, 10))
        spec = GaussianFootprint(((2.0, 0.0), (0.0, 2.0)))
        w = footprint_weights(spec, (5.0, 5.0, 0.0), dom)
        reflected = {(9 - i, 9 - j): v for (i, j), v in w.items()}
        assert reflected == w


class TestAccumulate:
    def test_stationary_dirac_concentrates(self):
        acc = StatsAccumulator.empty(UNIT10)
        traj = still_trajectory(0.55, 0.35, duration=10.0)
        out = accumulate(acc, traj, DiracFootprint())
        assert out.total_time == 10.0
        assert out.contributions == 1
        assert out.mass[3, 5] == pytest.approx(10.0 / UNIT10.cell_area, rel=1e-9)
        assert np.count_nonzero(out.mass) == 1
        gamma = to_pdf(out)
        assert gamma.values[3, 5] == pytest.approx(100.0, rel=1e-12)

    def test_input_unchanged(self):
        acc = StatsAccumulator.empty(UNIT10)
        accumulate(acc, still_trajectory(0.5, 0.5), DiracFootprint())
        assert acc.total_time == 0.0
        assert acc.mass.sum() == 0.0

    def test_order_commutes(self):
        t1 = still_trajectory(0.25, 0.25)
        t2 = still_trajectory(0.75, 0.75, duration=4.0)
        acc = StatsAccumulator.empty(UNIT10)
        spec = GaussianFootprint(((0.01, 0.0), (0.0, 0.01)))
        a = accumulate(accumulate(acc, t1, spec), t2, spec)
        b = accumulate(accumulate(acc, t2, spec), t1, spec)
        assert np.max(np.abs(a.mass - b.mass)) < 1e-12
        assert a.total_time == b.total_time

    def test_never_decreases_and_time_exact(self):
        acc = StatsAccumulator.empty(UNIT10)
        spec = BeamFootprint(0.3, math.pi / 2.0)
        durations = (10.0, 2.5, 7.25)
        total = 0.0
        for k, d in enumerate(durations):
            nxt = accumulate(acc, still_trajectory(0.5, 0.5, theta=0.3 * k, duration=d), spec)
            assert np.all(nxt.mass >= acc.mass)
            assert nxt.total_time == acc.total_time + d
            acc = nxt
            total += d
        assert acc.total_time == total

    def test_spinning_beam_approximates_disc(self):
        dom = DomainSpec((40.0, 40.0), (200, 200))
        r = 8.0
        spec = BeamFootprint(r, math.pi / 4.0)
        n = 801
        thetas = np.linspace(0.0, 2.0 * math.pi, n)  # one full revolution
        traj = still_trajectory(20.0, 20.0, duration=80.0, dt=0.1, thetas=thetas)
        gamma = to_pdf(accumulate(StatsAccumulator.empty(dom), traj, spec))
        xs, ys = dom.cell_centers()
        X, Y = np.meshgrid(xs, ys)
        disc = ((X - 20.0) ** 2 + (Y - 20.0) ** 2 <= r * r).astype(float)
        disc_pdf = normalize(disc, dom)
        l1 = np.abs(gamma.values - disc_pdf.values).sum() * dom.cell_area
        assert l1 < 0.05

    def test_domain_mismatch(self):
        acc = StatsAccumulator.empty(UNIT10)
        traj = still_trajectory(5.0, 5.0)
        with pytest.raises(ValueError):
            accumulate(acc, traj, DiracFootprint())

    def test_rejects_outside_trajectory(self):
        acc = StatsAccumulator.empty(UNIT10)
        with pytest.raises(ValueError):
            accumulate(acc, still_trajectory(1.5, 0.5), DiracFootprint())


class TestToPdf:
    def test_normalized(self):
        acc = accumulate(StatsAccumulator.empty(UNIT10),
                         still_trajectory(0.3, 0.7), DiracFootprint())
        assert to_pdf(acc).total_mass() == pytest.approx(1.0, abs=1e-9)

    def test_scale_invariance(self):
        acc = accumulate(StatsAccumulator.empty(UNIT10),
                         still_trajectory(0.3, 0.7),
                         GaussianFootprint(((0.02, 0.0), (0.0, 0.02))))
        scaled = StatsAccumulator(acc.domain, acc.mass * 17.0, acc.total_time,
                                  acc.contributions)
        assert np.max(np.abs(to_pdf(acc).values - to_pdf(scaled).values)) < 1e-12

    def test_two_identical_robots_match_one(self):
        spec = GaussianFootprint(((0.02, 0.0), (0.0, 0.02)))
        traj = still_trajectory(0.4, 0.6)
        one = accumulate(StatsAccumulator.empty(UNIT10), traj, spec)
        two = accumulate(one, traj, spec)
        assert np.max(np.abs(to_pdf(one).values - to_pdf(two).values)) < 1e-12

    def test_empty_accumulator_errors(self):
        with pytest.raises(ValueError):
            to_pdf(StatsAccumulator.empty(UNIT10))


class TestSampleMass:
    def test_skip_outside_drops_samples(self):
        xs = np.array([0.5, 1.5])
        ys = np.array([0.5, 0.5])
        th = np.zeros(2)
        mass = sample_mass(DiracFootprint(), xs, ys, th, 0.1, UNIT10, skip_outside=True)
        assert mass.sum() == pytest.approx(0.1 / UNIT10.cell_area)
        with pytest.raises(ValueError):
            sample_mass(DiracFootprint(), xs, ys, th, 0.1, UNIT10)

    def test_gaussian_separable_matches_general(self):
        # the diagonal fast path and the quadratic-form path agree
        dom = DomainSpec((20.0, 20.0), (40, 40))
        xs = np.array([10.0, 7.3])
        ys = np.array([9.1, 12.0])
        th = np.zeros(2)
        diag = GaussianFootprint(((4.0, 0.0), (0.0, 2.25)))
        tilted = GaussianFootprint(((4.0, 1e-12), (1e-12, 2.25)))
        a = sample_mass(diag, xs, ys, th, 0.1, dom)
        b = sample_mass(tilted, xs, ys, th, 0.1, dom)
        assert np.max(np.abs(a - b)) < 1e-12
