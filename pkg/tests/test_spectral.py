import math

import numpy as np
import pytest

from ergoplan.dubins import InputBounds, ParamVector, RobotState, Trajectory, rollout
from ergoplan.grid import DensityGrid, DomainSpec, GmmComponent, build_gmm_density, normalize
from ergoplan.spectral import (CoeffSet, basis_eval, basis_norms, density_coeffs,
                               ergodicity_metric, mode_weights, trajectory_coeffs)

UNIT = DomainSpec((1.0, 1.0), (100, 100))


def stationary_trajectory(x, y, duration=10.0, dt=0.1, theta=0.0):
    n = int(round(duration / dt)) + 1
    states = np.tile([x, y, theta], (n, 1))
    return Trajectory(np.arange(n) * dt, states, np.zeros(n), np.zeros(n), dt, duration)


class TestBasis:
    def test_constant_mode_is_one(self):
        for x in ((0.0, 0.0), (0.3, 0.9), (1.0, 1.0)):
            assert basis_eval((0, 0), x, UNIT) == pytest.approx(1.0, abs=1e-15)

    def test_first_mode_value(self):
        assert basis_eval((1, 0), (0.0, 0.3), UNIT) == pytest.approx(math.sqrt(2.0), abs=1e-12)

    def test_unit_norm_by_quadrature(self):
        fine = DomainSpec((2.0, 3.0), (400, 400))
        xs, ys = fine.cell_centers()
        X, Y = np.meshgrid(xs, ys)
        for k in ((0, 0), (1, 0), (2, 3), (7, 7)):
            h = basis_norms(fine, 7)[k[0], k[1]]
            f = np.cos(k[0] * np.pi * X / 2.0) * np.cos(k[1] * np.pi * Y / 3.0) / h
            assert (f ** 2).sum() * fine.cell_area == pytest.approx(1.0, abs=1e-4)

    def test_neumann_boundary(self):
        # one-sided finite difference of the normal derivative at the wall
        h = 1e-9
        for k in ((1, 2), (5, 3), (10, 10)):
            for x in ((0.0, 0.37), (1.0, 0.37)):
                x_in = (h, x[1]) if x[0] == 0.0 else (1.0 - h, x[1])
                diff = (basis_eval(k, x_in, UNIT) - basis_eval(k, x, UNIT)) / h
                assert abs(diff) < 1e-6

    def test_rejects_outside_domain(self):
        with pytest.raises(ValueError):
            basis_eval((1, 1), (1.2, 0.5), UNIT)


class TestDensityCoeffs:
    def test_uniform_density(self):
        xi = normalize(np.ones((100, 100)), UNIT)
        c = density_coeffs(xi, 10).values
        assert c[0, 0] == pytest.approx(1.0, abs=1e-9)
        off = c.copy()
        off[0, 0] = 0.0
        assert np.max(np.abs(off)) < 1e-9

    def test_squared_mode_against_quadrature_oracle(self):
        # density proportional to the squared (1,1) basis function; its
        # projections have closed forms: 1, sqrt(2)/2 at (2,0) and (0,2),
        # 1/2 at (2,2), zero elsewhere
        dom = DomainSpec((1.0, 1.0), (200, 200))
        xs, ys = dom.cell_centers()
        X, Y = np.meshgrid(xs, ys)
        f11 = 2.0 * np.cos(np.pi * X) * np.cos(np.pi * Y)
        xi = normalize(f11 ** 2, dom)
        c = density_coeffs(xi, 3).values
        expected = np.zeros((4, 4))
        expected[0, 0] = 1.0
        expected[2, 0] = expected[0, 2] = math.sqrt(2.0) / 2.0
        expected[2, 2] = 0.5
        assert np.max(np.abs(c - expected)) < 1e-6

    def test_grid_convergence(self):
        comps = (GmmComponent((0.4, 0.6), ((0.02, 0.005), (0.005, 0.03)), 0.6),
                 GmmComponent((0.7, 0.3), ((0.01, 0.0), (0.0, 0.01)), 0.4))
        coarse = density_coeffs(build_gmm_density(DomainSpec((1.0, 1.0), (100, 100)), comps), 10)
        fine = density_coeffs(build_gmm_density(DomainSpec((1.0, 1.0), (200, 200)), comps), 10)
        assert np.max(np.abs(coarse.values - fine.values)) < 1e-3


class TestTrajectoryCoeffs:
    def test_stationary_equals_pointwise_basis(self):
        traj = stationary_trajectory(0.31, 0.77)
        c = trajectory_coeffs([traj], 8, UNIT).values
        for k1 in range(9):
            for k2 in range(9):
                assert c[k1, k2] == pytest.approx(
                    basis_eval((k1, k2), (0.31, 0.77), UNIT), abs=1e-12)

    def test_two_identical_robots_match_one(self):
        traj = stationary_trajectory(0.2, 0.9)
        one = trajectory_coeffs([traj], 6, UNIT).values
        two = trajectory_coeffs([traj, traj], 6, UNIT).values
        assert np.max(np.abs(one - two)) < 1e-12

    def test_time_step_convergence_on_circle(self):
        # one full circle of radius v/w centered in the domain
        dom = DomainSpec((20.0, 20.0), (50, 50))
        bounds = InputBounds(0.0, 2.0, -0.5, 0.5)
        w = 2.0 * math.pi / 20.0
        q0 = RobotState(10.0, 10.0 - 1.0 / w, 0.0)
        z = ParamVector([1.0, w], bounds, 20.0)
        coarse = trajectory_coeffs([rollout(q0, z, 0.1)], 10, dom).values
        fine = trajectory_coeffs([rollout(q0, z, 0.05)], 10, dom).values
        assert np.max(np.abs(coarse - fine)) < 1e-4

    def test_rejects_outside_samples(self):
        traj = stationary_trajectory(1.4, 0.5)
        with pytest.raises(ValueError):
            trajectory_coeffs([traj], 4, UNIT)

    def test_permuting_robots_invariant(self):
        trajs = [stationary_trajectory(0.2, 0.3), stationary_trajectory(0.8, 0.6),
                 stationary_trajectory(0.5, 0.9)]
        a = trajectory_coeffs(trajs, 5, UNIT)
        b = trajectory_coeffs(trajs[::-1], 5, UNIT)
        xi = normalize(np.ones((100, 100)), UNIT)
        xic = density_coeffs(xi, 5)
        assert ergodicity_metric(a, xic) == pytest.approx(
            ergodicity_metric(b, xic), abs=1e-12)


class TestErgodicityMetric:
    def test_identical_sets(self):
        c = CoeffSet(4, np.random.default_rng(0).random((5, 5)))
        assert ergodicity_metric(c, c) == 0.0

    def test_unit_difference_at_zero_mode(self):
        a = np.zeros((5, 5))
        b = a.copy()
        b[0, 0] = 1.0
        assert ergodicity_metric(CoeffSet(4, a), CoeffSet(4, b)) == pytest.approx(1.0)

    def test_unit_difference_at_first_mode(self):
        a = np.zeros((5, 5))
        b = a.copy()
        b[1, 0] = 1.0
        assert ergodicity_metric(CoeffSet(4, a), CoeffSet(4, b)) == pytest.approx(
            2.0 ** -1.5, abs=1e-12)

    def test_mismatched_kmax(self):
        with pytest.raises(ValueError):
            ergodicity_metric(CoeffSet(2, np.zeros((3, 3))), CoeffSet(3, np.zeros((4, 4))))

    def test_weights_shape_and_monotone(self):
        w = mode_weights(10)
        assert w.shape == (11, 11)
        assert w[0, 0] == 1.0
        assert w[1, 0] == pytest.approx(2.0 ** -1.5)
        assert np.all(np.diff(w, axis=0) < 0)


class TestGramMatrix:
    def test_orthonormal_small(self):
        dom = DomainSpec((1.0, 1.0), (300, 300))
        k_max = 5
        xs, ys = dom.cell_centers()
        cx = np.cos(np.outer(np.arange(k_max + 1), xs) * np.pi)
        cy = np.cos(np.outer(np.arange(k_max + 1), ys) * np.pi)
        h = basis_norms(dom, k_max)
        n_modes = (k_max + 1) ** 2
        F = np.empty((n_modes, xs.size * ys.size))
        for k1 in range(k_max + 1):
            for k2 in range(k_max + 1):
                F[k1 * (k_max + 1) + k2] = np.outer(cy[k2], cx[k1]).ravel() / h[k1, k2]
        gram = (F * dom.cell_area) @ F.T
        assert np.max(np.abs(gram - np.eye(n_modes))) < 1e-4


class TestPhiAgainstCoverage:
    def test_matching_histogram_beats_parked(self):
        # trajectories whose occupancy matches the density score better
        # than sitting at its mode
        rng = np.random.default_rng(41)
        dom = DomainSpec((1.0, 1.0), (50, 50))
        for _ in range(5):
            a = rng.uniform(0.003, 0.01)
            comps = (GmmComponent(tuple(rng.uniform(0.3, 0.7, 2)),
                                  ((a, 0.0), (0.0, a)), 1.0),)
            xi = build_gmm_density(dom, comps)
            xic = density_coeffs(xi, 10)
            # importance-sample positions from the density itself
            probs = (xi.values / xi.values.sum()).ravel()
            cells = rng.choice(probs.size, size=4000, p=probs)
            jj, ii = np.divmod(cells, 50)
            xs_c, ys_c = dom.cell_centers()
            n = cells.size + 1
            states = np.zeros((n, 3))
            states[:-1, 0] = xs_c[ii]
            states[:-1, 1] = ys_c[jj]
            states[-1] = states[-2]
            sampled = Trajectory(np.arange(n) * 0.1, states, np.zeros(n),
                                 np.zeros(n), 0.1, (n - 1) * 0.1)
            phi_sampled = ergodicity_metric(trajectory_coeffs([sampled], 10, dom), xic)
            i, j = xi.max_cell()
            parked = stationary_trajectory(xs_c[i], ys_c[j], duration=(n - 1) * 0.1)
            phi_parked = ergodicity_metric(trajectory_coeffs([parked], 10, dom), xic)
            assert phi_sampled < phi_parked
