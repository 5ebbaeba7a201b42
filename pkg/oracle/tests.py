import math

import numpy as np
from django.test import SimpleTestCase

from caputo.exceptions import DomainError
from caputo.grids import SampledPath, TimeGrid
from caputo.operators import discrete_ibp_terms, left_caputo
from caputo.weights import build_weights, gamma_fn, integrate_weight_density

from .functions import SmoothFunction
from .integrals import (
    continuous_ftc_residual,
    continuous_ibp_terms,
    continuous_left_caputo,
    continuous_left_caputo_alt,
    continuous_right_caputo,
    continuous_right_caputo_alt,
    ibp_continuous_residual,
    kernel_limit_integral,
)

LINEAR = SmoothFunction.polynomial([0.0, 1.0])
SQUARE = SmoothFunction.polynomial([0.0, 0.0, 1.0])


class SmoothFunctionTests(SimpleTestCase):
    def test_derivative_spot_check(self):
        rng = np.random.default_rng(1)
        SmoothFunction.cosine(2.0).check_derivative(1.0, rng)
        SmoothFunction.polynomial([1.0, -2.0, 0.5]).check_derivative(3.0, rng)
        wrong = SmoothFunction(value=np.sin, derivative=np.sin)
        with self.assertRaises(DomainError):
            wrong.check_derivative(1.0, rng)

    def test_fixed_points_and_breakpoints(self):
        SmoothFunction.polynomial([1e6, 1.0]).check_derivative(2.0)
        SmoothFunction.piecewise_linear([0.0, 0.5, 1.0], [0.0, 1.0, -1.0]).check_derivative(1.0)
        SmoothFunction.sine().check_derivative(1.0, start=0.25)
        with self.assertRaises(DomainError):
            SmoothFunction.sine().check_derivative(0.5, start=0.5)

    def test_operations_reject_inconsistent_derivative(self):
        wrong = SmoothFunction(value=np.sin, derivative=np.sin)
        calls = (
            lambda: continuous_left_caputo(wrong, 0.5, 0.5),
            lambda: continuous_right_caputo(wrong, 0.5, 0.5, 1.0),
            lambda: continuous_left_caputo_alt(wrong, 0.5, 0.5),
            lambda: continuous_right_caputo_alt(wrong, 0.5, 0.5, 1.0),
            lambda: continuous_ftc_residual(wrong, 0.5, 0.5),
            lambda: continuous_ibp_terms(wrong, LINEAR, 0.5, 1.0),
            lambda: continuous_ibp_terms(LINEAR, wrong, 0.5, 1.0),
        )
        for call in calls:
            with self.assertRaises(DomainError):
                call()

    def test_reflection(self):
        f = SmoothFunction.polynomial([1.0, 2.0, 3.0]).reflected(2.0)
        self.assertAlmostEqual(float(f(0.5)), 1.0 + 2.0 * 1.5 + 3.0 * 1.5 ** 2)
        self.assertAlmostEqual(float(f.prime(0.5)), -(2.0 + 6.0 * 1.5))


class LeftCaputoTests(SimpleTestCase):
    def test_constant(self):
        self.assertEqual(continuous_left_caputo(SmoothFunction.constant(3.0), 0.7, 0.4), 0.0)

    def test_linear(self):
        value = continuous_left_caputo(LINEAR, 1.0, 0.5)
        self.assertAlmostEqual(value, 2.0 / math.sqrt(math.pi), delta=1e-9)

    def test_polynomials_closed_form(self):
        for alpha in (0.3, 0.5, 0.8):
            for t in (0.25, 1.0):
                expected = 2.0 * t ** (2.0 - alpha) / gamma_fn(3.0 - alpha)
                self.assertAlmostEqual(continuous_left_caputo(SQUARE, t, alpha), expected, delta=1e-9)

    def test_alternate_form(self):
        for f in (LINEAR, SQUARE, SmoothFunction.polynomial([1.0, -1.0, 0.0, 2.0])):
            for alpha in (0.3, 0.6):
                first = continuous_left_caputo(f, 1.0, alpha)
                second = continuous_left_caputo_alt(f, 1.0, alpha)
                self.assertAlmostEqual(first, second, delta=1e-8)

    def test_domain(self):
        with self.assertRaises(DomainError):
            continuous_left_caputo(LINEAR, 0.0, 0.5)
        with self.assertRaises(DomainError):
            continuous_left_caputo(LINEAR, 1.0, 1.0)


class RightCaputoTests(SimpleTestCase):
    def test_constant(self):
        self.assertEqual(continuous_right_caputo(SmoothFunction.constant(-1.0), 0.2, 0.5, 1.0), 0.0)

    def test_reflection_identity(self):
        T = 1.5
        f = SmoothFunction.polynomial([0.5, 1.0, -2.0, 0.3])
        for t in (0.1, 0.75, 1.2):
            right = continuous_right_caputo(f, t, 0.4, T)
            left = continuous_left_caputo(f.reflected(T), T - t, 0.4)
            self.assertAlmostEqual(right, -left, delta=1e-9)

    def test_decreasing_linear(self):
        T = 1.0
        f = SmoothFunction.polynomial([T, -1.0])
        for t in (0.0, 0.3, 0.9):
            expected = -(T - t) ** 0.5 / gamma_fn(1.5)
            self.assertAlmostEqual(continuous_right_caputo(f, t, 0.5, T), expected, delta=1e-9)

    def test_alternate_form(self):
        f = SmoothFunction.polynomial([0.0, 1.0, 1.0])
        for t in (0.0, 0.4):
            first = continuous_right_caputo(f, t, 0.35, 1.0)
            second = continuous_right_caputo_alt(f, t, 0.35, 1.0)
            self.assertAlmostEqual(first, second, delta=1e-8)

    def test_domain(self):
        with self.assertRaises(DomainError):
            continuous_right_caputo(LINEAR, 1.0, 0.5, 1.0)


class FtcResidualTests(SimpleTestCase):
    def test_constant(self):
        self.assertLessEqual(continuous_ftc_residual(SmoothFunction.constant(2.0), 1.0, 0.5), 1e-12)

    def test_polynomials(self):
        self.assertLessEqual(continuous_ftc_residual(LINEAR, 1.0, 0.5), 1e-6)
        self.assertLessEqual(continuous_ftc_residual(SQUARE, 1.0, 0.75), 1e-6)


class IbpTests(SimpleTestCase):
    def test_constants(self):
        one = SmoothFunction.constant(1.0)
        self.assertLessEqual(ibp_continuous_residual(one, SmoothFunction.constant(2.0), 0.5, 1.0), 1e-8)

    def test_linear_cases(self):
        self.assertLessEqual(ibp_continuous_residual(LINEAR, SmoothFunction.constant(1.0), 0.5, 1.0), 1e-5)
        self.assertLessEqual(ibp_continuous_residual(LINEAR, LINEAR, 0.5, 1.0), 1e-5)

    def test_discrete_terms_converge(self):
        f = SmoothFunction.polynomial([1.0, 1.0])
        phi = SmoothFunction.polynomial([1.0, 1.0])
        continuous = continuous_ibp_terms(f, phi, 0.8, 1.0)
        n = 16 * 2 ** 4
        grid = TimeGrid.from_horizon(1.0, n)
        discrete = discrete_ibp_terms(SampledPath.from_function(grid, f), phi, build_weights(0.8, n))
        for name in ('lhs', 'interior', 'end', 'start'):
            exact = getattr(continuous, name)
            self.assertLessEqual(abs(getattr(discrete, name) - exact), 0.05 * abs(exact), msg=name)


class DiscreteConsistencyTests(SimpleTestCase):
    def test_errors_decrease_as_tau_halves(self):
        for f in (LINEAR, SQUARE):
            for alpha in (0.3, 0.5, 0.8):
                errors = []
                for n in (16, 32, 64, 128):
                    grid = TimeGrid.from_horizon(1.0, n)
                    discrete = left_caputo(SampledPath.from_function(grid, f), build_weights(alpha, n))
                    exact = [continuous_left_caputo(f, t, alpha) for t in grid.times()[1:]]
                    errors.append(np.max(np.abs(discrete.values[1:] - exact)))
                self.assertTrue(all(b < a for a, b in zip(errors, errors[1:])), msg=(alpha, errors))

    def test_weight_density_limit(self):
        limit = kernel_limit_integral(np.cos, 0.5, 1.0)
        errors = []
        for n in (32, 64, 128):
            grid = TimeGrid.from_horizon(1.0, n)
            approx = integrate_weight_density(build_weights(0.5, n), grid, SmoothFunction.cosine())
            errors.append(abs(approx - limit))
        self.assertTrue(errors[0] > errors[1] > errors[2], msg=errors)
