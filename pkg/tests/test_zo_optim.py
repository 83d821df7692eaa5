"""
Unit Tests for the Zeroth-Order Optimizers

PURPOSE: Test the three direction estimators, the step-size schedule,
         the ascent loop (convergence, freezing, divergence) and the
         built-in objectives

RUN TESTS:
    python3 -m pytest tests/test_zo_optim.py -v
"""

import os
import sys
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from optim.objectives import concave_quadratic, linear_objective, make_objective, smoothed_piecewise
from optim.zo_optim import (
    DivergenceError,
    ObjectiveOracle,
    ScheduleConfig,
    exact_sign_oracle,
    finite_difference_gradient,
    run_ascent,
    zo_sgd_direction,
    zo_sign_sgd_direction,
    zspo_sign_direction,
)


class TestDirectionEstimators(unittest.TestCase):
    """Single-step estimators."""

    def setUp(self):
        self.a = np.array([1.0, -2.0, 0.5, 3.0, 0.0])
        self.linear = linear_objective(self.a)

    def test_two_point_is_exact_on_linear(self):
        """On a linear f the two-point estimate is <a, v> v for the drawn v."""
        theta = np.zeros(5)
        direction = zo_sgd_direction(self.linear, theta, 1e-3, np.random.default_rng(5))
        v = np.random.default_rng(5).standard_normal(5)
        np.testing.assert_allclose(direction, (self.a @ v) * v, rtol=1e-9, atol=1e-12)

    def test_two_point_is_unbiased_on_linear(self):
        rng = np.random.default_rng(11)
        n = 50_000
        total = np.zeros(5)
        for _ in range(n):
            total += zo_sgd_direction(self.linear, np.zeros(5), 1e-2, rng)
        self.assertLessEqual(np.linalg.norm(total / n - self.a), 0.05 * np.linalg.norm(self.a))

    def test_constant_objective_gives_zero(self):
        constant = ObjectiveOracle(4, lambda theta, rng=None: 3.0)
        rng = np.random.default_rng(0)
        np.testing.assert_array_equal(zo_sgd_direction(constant, np.ones(4), 0.1, rng), np.zeros(4))
        np.testing.assert_array_equal(
            zspo_sign_direction(exact_sign_oracle(constant), np.ones(4), 0.1, rng), np.zeros(4))

    def test_sign_direction_alignment(self):
        """E|<v, u>| for standard normal v and unit u is sqrt(2 / pi)."""
        u = np.array([0.6, 0.0, -0.8])
        compare = exact_sign_oracle(linear_objective(u))
        rng = np.random.default_rng(3)
        n = 100_000
        alignment = np.mean([zspo_sign_direction(compare, np.zeros(3), 0.01, rng) @ u for _ in range(n)])
        self.assertAlmostEqual(alignment, np.sqrt(2.0 / np.pi), delta=0.01 * np.sqrt(2.0 / np.pi))

    def test_sign_oracle_must_return_sign(self):
        with self.assertRaises(ValueError):
            zspo_sign_direction(lambda a, b, rng=None: 2, np.zeros(3), 0.1, np.random.default_rng(0))

    def test_zo_sign_sgd_first_coordinate(self):
        """f = theta_1: every averaged estimate is sum(v_1^2) > 0 on the first coordinate."""
        e1 = np.zeros(6)
        e1[0] = 1.0
        direction = zo_sign_sgd_direction(linear_objective(e1), np.zeros(6), 1e-3, 10,
                                          np.random.default_rng(8))
        self.assertEqual(direction[0], 1.0)
        self.assertTrue(set(np.unique(direction)) <= {-1.0, 0.0, 1.0})

    def test_rejects_bad_parameters(self):
        rng = np.random.default_rng(0)
        with self.assertRaises(ValueError):
            zo_sgd_direction(self.linear, np.zeros(5), 0.0, rng)
        with self.assertRaises(ValueError):
            zo_sign_sgd_direction(self.linear, np.zeros(5), 0.1, 0, rng)

    def test_non_finite_objective(self):
        broken = ObjectiveOracle(2, lambda theta, rng=None: np.nan)
        with self.assertRaises(ValueError):
            zo_sgd_direction(broken, np.zeros(2), 0.1, np.random.default_rng(0))


class TestSchedule(unittest.TestCase):

    def test_learning_rates(self):
        """c = 2, H = 4, d = 16: alpha_t = 1 / sqrt(t)."""
        schedule = ScheduleConfig(learning_rate_scale=2.0, horizon_constant=4.0, iterations=4)
        rates = schedule.learning_rates(16)
        self.assertAlmostEqual(rates[0], 1.0)
        self.assertAlmostEqual(rates[3], 0.5)
        self.assertAlmostEqual(schedule.learning_rate(4, 16), 0.5)

    def test_validation(self):
        with self.assertRaises(ValueError):
            ScheduleConfig(perturbation=0.0)
        with self.assertRaises(ValueError):
            ScheduleConfig(learning_rate_scale=-1.0)
        with self.assertRaises(ValueError):
            ScheduleConfig(iterations=0)
        with self.assertRaises(ValueError):
            ScheduleConfig().learning_rate(0, 3)


class TestRunAscent(unittest.TestCase):
    """The ascent loop on built-in objectives."""

    def test_converges_on_quadratic(self):
        """Gradient norm shrinks by at least 20x over 5000 steps for every seed."""
        objective = concave_quadratic(20)
        cases = {
            'zspo_sign': ScheduleConfig(1.0, 1e-3, 1.0, 5000),
            'zo_sign_sgd': ScheduleConfig(1.0, 1e-3, 1.0, 5000),
            'zo_sgd': ScheduleConfig(0.1, 1e-3, 1.0, 5000),
        }
        for method, schedule in cases.items():
            for seed in range(3):
                trace = run_ascent(objective, schedule, method, np.zeros(20), np.random.default_rng(seed), q=4)
                self.assertLessEqual(trace.grad_norms[-1], 0.05 * trace.grad_norms[0],
                                     f"{method} seed {seed}")

    def test_zero_learning_rate_freezes(self):
        objective = concave_quadratic(5)
        schedule = ScheduleConfig(learning_rate_scale=0.0, iterations=25)
        theta0 = np.arange(5.0)
        for method in ('zo_sgd', 'zo_sign_sgd', 'zspo_sign'):
            trace = run_ascent(objective, schedule, method, theta0, np.random.default_rng(0))
            np.testing.assert_array_equal(trace.thetas, np.tile(theta0, (26, 1)))

    def test_trace_shapes(self):
        objective = concave_quadratic(3)
        trace = run_ascent(objective, ScheduleConfig(iterations=7), 'zo_sgd', np.zeros(3),
                           np.random.default_rng(1))
        self.assertEqual(trace.iterations, 7)
        self.assertEqual(trace.thetas.shape, (8, 3))
        self.assertEqual(trace.f_values.shape, (8,))
        self.assertEqual(trace.grad_norms.shape, (8,))
        np.testing.assert_array_equal(trace.final_theta, trace.thetas[-1])

    def test_same_seed_same_path(self):
        objective = concave_quadratic(4)
        schedule = ScheduleConfig(iterations=50)
        a = run_ascent(objective, schedule, 'zspo_sign', np.zeros(4), np.random.default_rng(9))
        b = run_ascent(objective, schedule, 'zspo_sign', np.zeros(4), np.random.default_rng(9))
        np.testing.assert_array_equal(a.thetas, b.thetas)

    def test_sign_steps_move_by_rate_times_perturbation(self):
        """Each zspo_sign step is s_t alpha_t v_t with s_t in {-1, 0, 1} and v_t the drawn direction."""
        d = 6
        objective = concave_quadratic(d)
        schedule = ScheduleConfig(iterations=40)
        trace = run_ascent(objective, schedule, 'zspo_sign', np.zeros(d), np.random.default_rng(17),
                           sign_oracle=exact_sign_oracle(objective))
        replay = np.random.default_rng(17)
        steps = np.diff(trace.thetas, axis=0)
        for t, (step, rate) in enumerate(zip(steps, trace.learning_rates), start=1):
            v = replay.standard_normal(d)
            matches = [s for s in (-1, 0, 1) if np.allclose(step, s * rate * v, rtol=1e-10, atol=1e-12)]
            self.assertEqual(len(matches), 1, f"t={t}")
            self.assertAlmostEqual(np.linalg.norm(step), abs(matches[0]) * rate * np.linalg.norm(v), places=10)

    def test_divergence_is_reported(self):
        objective = concave_quadratic(20)
        schedule = ScheduleConfig(learning_rate_scale=1e13, iterations=10)
        with self.assertRaises(DivergenceError) as ctx:
            run_ascent(objective, schedule, 'zspo_sign', np.zeros(20), np.random.default_rng(0))
        self.assertEqual(ctx.exception.iteration, 1)

    def test_sign_oracle_without_objective(self):
        compare = exact_sign_oracle(concave_quadratic(3))
        trace = run_ascent(None, ScheduleConfig(iterations=5), 'zspo_sign', np.zeros(3),
                           np.random.default_rng(0), sign_oracle=compare)
        self.assertIsNone(trace.f_values)
        self.assertEqual(trace.thetas.shape, (6, 3))

    def test_rejects_bad_arguments(self):
        objective = concave_quadratic(3)
        with self.assertRaises(ValueError):
            run_ascent(objective, ScheduleConfig(), 'adam', np.zeros(3), np.random.default_rng(0))
        with self.assertRaises(ValueError):
            run_ascent(None, ScheduleConfig(), 'zo_sgd', np.zeros(3), np.random.default_rng(0))
        with self.assertRaises(ValueError):
            run_ascent(objective, ScheduleConfig(), 'zo_sgd', np.zeros(4), np.random.default_rng(0))


class TestObjectives(unittest.TestCase):
    """Built-in objectives and their gradients."""

    def test_gradients_match_finite_differences(self):
        theta = np.array([0.3, -2.5, 1.7, 4.0])
        for objective in (concave_quadratic(4, curvature=0.7), smoothed_piecewise(4)):
            numeric = finite_difference_gradient(objective, theta, step=1e-6)
            np.testing.assert_allclose(objective.gradient(theta), numeric, atol=1e-6)

    @given(x=arrays(float, 4, elements=st.floats(-20, 20)),
           y=arrays(float, 4, elements=st.floats(-20, 20)),
           curvature=st.floats(0.05, 5.0),
           delta=st.floats(0.1, 3.0))
    @settings(max_examples=100, deadline=None)
    def test_smoothness_bounds_linearization_error(self, x, y, curvature, delta):
        """|f(y) - f(x) - <grad f(x), y - x>| <= L / 2 ||y - x||^2."""
        for objective in (concave_quadratic(4, curvature=curvature), smoothed_piecewise(4, delta=delta)):
            error = abs(objective(y) - objective(x) - objective.gradient(x) @ (y - x))
            bound = 0.5 * objective.smoothness * float(np.sum((y - x) ** 2))
            self.assertLessEqual(error, bound * (1 + 1e-9) + 1e-9, objective.name)

    def test_quadratic_optimum(self):
        objective = concave_quadratic(3)
        self.assertEqual(objective(np.ones(3)), 0.0)
        self.assertEqual(objective.smoothness, 2.0)

    def test_noise_only_with_rng(self):
        objective = make_objective('quadratic', 3, noise=0.5)
        theta = np.zeros(3)
        self.assertEqual(objective(theta), -3.0)
        self.assertNotEqual(objective(theta, np.random.default_rng(0)), -3.0)

    def test_unknown_objective(self):
        with self.assertRaises(ValueError):
            make_objective('rosenbrock', 3)

    def test_finite_difference_step_must_be_positive(self):
        with self.assertRaises(ValueError):
            finite_difference_gradient(lambda th: 0.0, np.zeros(2), step=0.0)


if __name__ == '__main__':
    unittest.main()
