"""
Unit tests for the explicit and Crank-Nicolson propagators
"""
import unittest

import numpy as np

from analysis import expectation_values, width_law
from potentials import eckart_potential, free_potential
from propagator import (
    EXPLICIT, IMPLICIT, PropagationSchedule, advance_field, make_schedule, propagate,
    step_ftcs, step_implicit
)
from utils.errors import DivergenceError, ValidationError
from wavepacket import GaussianParams, discrete_norm, gaussian_packet, make_field, make_grid, node_positions

PACKET = GaussianParams(gamma=2.0, q0=-2.0, p0=10.0)


class TestSingleSteps(unittest.TestCase):

    def setUp(self):
        self.grid = make_grid(-1.0, 1.0, 21, 1e-4, 1)
        self.free = free_potential()

    def test_zero_field_stays_zero(self):
        zero = make_field(np.zeros(self.grid.n_points), self.grid)
        np.testing.assert_array_equal(step_ftcs(zero, self.free, self.grid).values, 0.0)
        np.testing.assert_array_equal(step_implicit(zero, self.free, self.grid).values, 0.0)

    def test_unit_impulse_explicit(self):
        impulse = np.zeros(self.grid.n_points, dtype=complex)
        impulse[10] = 1.0
        result = step_ftcs(make_field(impulse, self.grid), self.free, self.grid).values

        ratio = self.grid.dt / self.grid.dq ** 2
        expected = np.zeros(self.grid.n_points, dtype=complex)
        expected[10] = 1.0 - 1j * ratio
        expected[9] = expected[11] = 0.5j * ratio
        np.testing.assert_allclose(result, expected, rtol=0, atol=1e-15)

    def test_single_explicit_step_detects_blow_up(self):
        # dt/dq^2 = 1e4: one step multiplies the impulse by about 1e4
        grid = make_grid(-1.0, 1.0, 21, 100.0, 1)
        impulse = np.zeros(grid.n_points, dtype=complex)
        impulse[10] = 1.0
        with self.assertRaises(DivergenceError):
            step_ftcs(make_field(impulse, grid), self.free, grid)
        # an explicit reference overrides the incoming field's peak
        result = step_ftcs(make_field(impulse, grid), self.free, grid, reference_max=1e3)
        self.assertAlmostEqual(abs(result.values[10]), np.hypot(1.0, 1e4), places=6)

    def test_explicit_step_matches_extended_precision(self):
        grid = make_grid(-10.0, 10.0, 2500, 4e-8, 1)
        field = gaussian_packet(grid, PACKET)
        result = step_ftcs(field, self.free, grid).values

        psi = field.values.astype(np.clongdouble)
        dq = np.longdouble(grid.dq)
        dt = np.longdouble(grid.dt)
        reference = np.zeros_like(psi)
        reference[1:-1] = psi[1:-1] + dt * (np.clongdouble(0.5j) * (psi[2:] - 2 * psi[1:-1] + psi[:-2]) / dq ** 2)

        scale = np.abs(reference).max()
        error = np.abs(result.astype(np.clongdouble) - reference).max()
        self.assertLess(float(error / scale), 1e-12)

    def test_time_advances(self):
        grid = make_grid(-10.0, 10.0, 500, 1e-4, 1)
        field = gaussian_packet(grid, PACKET)
        self.assertAlmostEqual(step_ftcs(field, self.free, grid).time, 1e-4)
        self.assertAlmostEqual(step_implicit(field, self.free, grid).time, 1e-4)

    def test_advance_field_dispatches_on_scheme(self):
        grid = make_grid(-10.0, 10.0, 500, 1e-4, 1)
        field = gaussian_packet(grid, PACKET)
        np.testing.assert_array_equal(advance_field(field, self.free, grid, EXPLICIT).values,
                                      step_ftcs(field, self.free, grid).values)
        np.testing.assert_array_equal(advance_field(field, self.free, grid, IMPLICIT).values,
                                      step_implicit(field, self.free, grid).values)

    def test_boundaries_held_at_zero(self):
        grid = make_grid(-1.0, 1.0, 21, 1e-3, 1)
        values = np.ones(grid.n_points, dtype=complex)
        for step in (step_ftcs, step_implicit):
            result = step(make_field(values, grid), self.free, grid).values
            self.assertEqual(result[0], 0.0)
            self.assertEqual(result[-1], 0.0)


class TestPropagate(unittest.TestCase):

    def setUp(self):
        self.grid = make_grid(-10.0, 10.0, 500, 1e-5, 2000)
        self.initial = gaussian_packet(self.grid, PACKET)
        self.free = free_potential()
        self.eckart = eckart_potential(200.0, 20.0, 0.0)

    def test_zero_steps_keeps_initial_state(self):
        result = propagate(self.initial, self.free, self.grid, PropagationSchedule(), n_steps=0)
        self.assertEqual(len(result.snapshots), 1)
        self.assertEqual(result.final.time, 0.0)
        np.testing.assert_array_equal(result.final.field.values, self.initial.values)

    def test_snapshot_schedule(self):
        schedule = make_schedule(IMPLICIT, 3, 5, 10)
        result = propagate(self.initial, self.free, self.grid, schedule, n_steps=10)
        self.assertEqual([snap.step for snap in result.snapshots], [0, 3, 6, 9, 10])
        self.assertTrue(np.all(np.diff(result.times) > 0))
        self.assertEqual([t for t, _ in result.norm_history], [0.0, 5 * self.grid.dt, 10 * self.grid.dt])
        for snap in result.snapshots:
            np.testing.assert_allclose(snap.polar.amplitude, np.abs(snap.field.values))

    def test_observer_sees_every_step(self):
        seen = []
        propagate(self.initial, self.free, self.grid, PropagationSchedule(), n_steps=7,
                  observer=lambda step, field: seen.append((step, field.time)))
        self.assertEqual([step for step, _ in seen], list(range(8)))
        self.assertEqual(seen[-1][1], 7 * self.grid.dt)

    def test_rejects_unnormalized_initial_state(self):
        doubled = make_field(2.0 * self.initial.values, self.grid)
        with self.assertRaises(ValidationError):
            propagate(doubled, self.free, self.grid, PropagationSchedule(), n_steps=1)

    def test_schedule_validation(self):
        with self.assertRaises(ValidationError):
            make_schedule(IMPLICIT, 0, 1, 10)
        with self.assertRaises(ValidationError):
            make_schedule(IMPLICIT, 11, 1, 10)
        with self.assertRaises(ValidationError):
            make_schedule("split-operator", 1, 1, 10)

    def test_implicit_conserves_norm(self):
        grid = make_grid(-10.0, 10.0, 1000, 1e-5, 10000)
        initial = gaussian_packet(grid, PACKET)
        start = discrete_norm(initial, grid)
        schedule = make_schedule(IMPLICIT, 10000, 1000, 10000)
        result = propagate(initial, self.free, grid, schedule)
        for _, norm in result.norm_history:
            self.assertLess(abs(norm - start), 1e-10)
        self.assertLess(abs(discrete_norm(result.final.field, grid) - 1.0), 1e-8)

    def test_implicit_conserves_norm_with_barrier(self):
        schedule = make_schedule(IMPLICIT, 500, 100, 2000)
        result = propagate(self.initial, self.eckart, self.grid, schedule)
        self.assertLess(result.max_norm_deviation(), 1e-8)

    def test_free_packet_moves_with_discrete_group_velocity(self):
        grid = make_grid(-10.0, 10.0, 2500, 1e-4, 2000)
        initial = gaussian_packet(grid, PACKET)
        _, p_disc, _ = expectation_values(initial, grid)
        result = propagate(initial, self.free, grid, make_schedule(IMPLICIT, 500, 500, 2000))

        for snap in result.snapshots:
            mean_q, mean_p, sigma = expectation_values(snap.field, grid)
            self.assertAlmostEqual(mean_q, PACKET.q0 + p_disc * snap.time, delta=1e-4)
            self.assertAlmostEqual(mean_q, PACKET.q0 + PACKET.p0 * snap.time, delta=1e-2)
            self.assertAlmostEqual(mean_p, p_disc, delta=1e-6)
            self.assertAlmostEqual(sigma / float(width_law(PACKET.gamma, snap.time)), 1.0, delta=5e-3)

    def test_linearity(self):
        left = GaussianParams(gamma=2.0, q0=-4.0, p0=10.0)
        right = GaussianParams(gamma=2.0, q0=4.0, p0=-5.0)
        psi_1 = gaussian_packet(self.grid, left).values
        psi_2 = gaussian_packet(self.grid, right).values
        a, b = 0.6, 0.8j

        for scheme in (IMPLICIT, EXPLICIT):
            schedule = make_schedule(scheme, 200, 200, 200)

            def final(values):
                return propagate(make_field(values, self.grid), self.eckart, self.grid, schedule,
                                 n_steps=200).final.field.values

            combined = final(a * psi_1 + b * psi_2)
            separate = a * final(psi_1) + b * final(psi_2)
            np.testing.assert_allclose(combined, separate, rtol=0, atol=1e-12)

    def test_explicit_agrees_with_implicit_over_short_run(self):
        schedule_explicit = make_schedule(EXPLICIT, 2000, 100, 2000)
        schedule_implicit = make_schedule(IMPLICIT, 2000, 100, 2000)
        explicit = propagate(self.initial, self.free, self.grid, schedule_explicit)
        implicit = propagate(self.initial, self.free, self.grid, schedule_implicit)

        density_explicit = np.abs(explicit.final.field.values) ** 2
        density_implicit = np.abs(implicit.final.field.values) ** 2
        peak = density_implicit.max()
        self.assertLess(np.abs(density_explicit - density_implicit).max(), 1e-3 * peak)
        self.assertLess(explicit.max_norm_deviation(), 1e-3)

    def test_explicit_divergence_reports_step(self):
        grid = make_grid(-10.0, 10.0, 201, 1e-2, 100)
        envelope = gaussian_packet(grid, GaussianParams(gamma=0.5, q0=0.0, p0=0.0)).values
        checkerboard = envelope * (-1.0) ** np.arange(grid.n_points)
        initial = make_field(checkerboard / np.sqrt(discrete_norm(make_field(checkerboard, grid), grid)), grid)

        with self.assertRaises(DivergenceError) as ctx:
            propagate(initial, self.free, grid, make_schedule(EXPLICIT, 10, 10, 100))
        self.assertIsNotNone(ctx.exception.step)
        self.assertGreater(ctx.exception.step, 1)
        self.assertLessEqual(ctx.exception.step, 100)

    def test_nodes_untouched_by_stepping(self):
        before = node_positions(self.grid).copy()
        propagate(self.initial, self.free, self.grid, PropagationSchedule(), n_steps=3)
        np.testing.assert_array_equal(node_positions(self.grid), before)


if __name__ == "__main__":
    unittest.main()
