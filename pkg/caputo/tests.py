import math

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from .exceptions import DomainError, GridMismatch
from .grids import FractionalOrder, SampledPath, TimeGrid
from .operators import (
    caputo_square_gap,
    discrete_ibp_residual,
    discrete_ibp_terms,
    ftc_reconstruct_backward,
    ftc_reconstruct_forward,
    left_caputo,
    nonpositive_derivative_bound,
    right_caputo,
)
from .weights import (
    CaputoWeights,
    build_weights,
    caputo_scale,
    ftc_kernel_sum,
    gamma_fn,
    integrate_weight_density,
    weight_density,
    weight_identity_residuals,
)


def _random_path(rng, n, horizon=1.0):
    grid = TimeGrid.from_horizon(horizon, n)
    return SampledPath(grid=grid, values=rng.standard_normal(n + 1))


class GammaTests(SimpleTestCase):
    def test_classical_values(self):
        self.assertEqual(gamma_fn(1.0), 1.0)
        self.assertAlmostEqual(gamma_fn(0.5), math.sqrt(math.pi), places=13)
        self.assertAlmostEqual(gamma_fn(1.5), 0.5 * math.sqrt(math.pi), places=13)

    def test_recurrence_on_range(self):
        for x in np.linspace(0.05, 29.0, 40):
            assert_allclose(gamma_fn(x + 1.0), x * gamma_fn(x), rtol=1e-12)

    def test_rejects_non_positive(self):
        for x in (0.0, -1.0, float('nan')):
            with self.assertRaises(DomainError):
                gamma_fn(x)


class OrderAndGridTests(SimpleTestCase):
    def test_order_bounds(self):
        for alpha in (0.0, -0.1, 1.1):
            with self.assertRaises(DomainError):
                FractionalOrder(alpha)
        self.assertTrue(FractionalOrder(1).is_classical)

    def test_grid_horizon(self):
        grid = TimeGrid.from_horizon(0.5, 32)
        self.assertEqual(grid.tau, 0.5 / 32)
        self.assertAlmostEqual(grid.horizon, 0.5)
        assert_allclose(grid.times()[[0, -1]], [0.0, 0.5])

    def test_path_length_checked(self):
        with self.assertRaises(GridMismatch):
            SampledPath(grid=TimeGrid(0.1, 4), values=np.zeros(4))


class WeightTests(SimpleTestCase):
    def test_classical_order_is_exact(self):
        weights = build_weights(1.0, 5)
        assert_array_equal(weights.lambdas, [1.0, 0.0, 0.0, 0.0, 0.0])

    def test_second_weight(self):
        weights = build_weights(0.5, 2)
        self.assertAlmostEqual(weights.lam(2), 1.0 - 2.0 ** -0.5, places=15)

    def test_identity_monotonicity_and_decay(self):
        n = 10_000
        k = np.arange(1, n + 1, dtype=float)
        for alpha in (0.1, 0.25, 0.5, 0.75, 0.9):
            weights = build_weights(alpha, n)
            lam = weights.lambdas
            self.assertEqual(lam[0], 1.0)
            self.assertLessEqual(np.max(np.abs(weight_identity_residuals(weights))), 1e-10)
            self.assertTrue(np.all(np.diff(lam) < 0.0), msg=f'alpha={alpha}')
            self.assertTrue(np.all(lam <= k ** -alpha * (1.0 + 1e-12)))
            self.assertTrue(np.all(np.cumsum(lam) <= k ** (1.0 - alpha) * (1.0 + 1e-12)))

    def test_cap_and_domain(self):
        with self.assertRaises(DomainError):
            build_weights(0.5, 0)
        with self.assertRaises(DomainError):
            build_weights(0.5, 11, max_n=10)

    def test_tables_are_read_only(self):
        weights = build_weights(0.3, 8)
        with self.assertRaises(ValueError):
            weights.lambdas[0] = 2.0

    def test_density(self):
        grid = TimeGrid(1 / 64, 64)
        weights = build_weights(0.5, 64)
        self.assertAlmostEqual(weight_density(weights, grid, 0.5 / 64), 8.0)
        self.assertAlmostEqual(weight_density(weights, grid, 1 / 64), 8.0)
        for t in np.linspace(0.001, 1.0, 97):
            self.assertLessEqual(weight_density(weights, grid, t), t ** -0.5 * (1 + 1e-12))
        with self.assertRaises(DomainError):
            weight_density(weights, grid, 0.0)
        with self.assertRaises(DomainError):
            weight_density(weights, grid, 1.5)

    def test_density_integral_of_constant(self):
        grid = TimeGrid(0.25, 4)
        weights = build_weights(0.5, 4)
        expected = 0.25 ** 0.5 * np.sum(weights.lambdas)
        self.assertAlmostEqual(integrate_weight_density(weights, grid, lambda t: 1.0), expected)


class LeftRightCaputoTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(7)

    def test_constant_path(self):
        grid = TimeGrid(0.1, 10)
        path = SampledPath(grid=grid, values=np.full(11, 3.0))
        weights = build_weights(0.4, 10)
        assert_array_equal(left_caputo(path, weights).values, 0.0)
        assert_array_equal(right_caputo(path, weights).values, 0.0)

    def test_classical_backward_difference_bitwise(self):
        path = _random_path(self.rng, 128)
        weights = build_weights(1.0, 128)
        derivative = left_caputo(path, weights).values
        scale = caputo_scale(weights.order, path.grid.tau)
        assert_array_equal(derivative[1:], scale * np.diff(path.values))
        assert_allclose(derivative[1:], np.diff(path.values) / path.grid.tau, rtol=1e-14)
        self.assertEqual(derivative[0], 0.0)

    def test_classical_forward_difference(self):
        path = _random_path(self.rng, 4)
        weights = build_weights(1.0, 4)
        derivative = right_caputo(path, weights).values
        assert_allclose(derivative[:-1], np.diff(path.values) / path.grid.tau, rtol=1e-14)
        self.assertEqual(derivative[-1], 0.0)

    def test_reversal_identity(self):
        for n in range(1, 17):
            path = _random_path(self.rng, n)
            weights = build_weights(0.6, n)
            right = right_caputo(path, weights).values
            left_reversed = left_caputo(path.reversed(), weights).values
            assert_allclose(right, -left_reversed[::-1], atol=1e-12)

    def test_linearity(self):
        f = _random_path(self.rng, 40)
        g = _random_path(self.rng, 40)
        weights = build_weights(0.35, 40)
        combined = f.with_values(2.5 * f.values - 0.75 * g.values)
        expected = 2.5 * left_caputo(f, weights).values - 0.75 * left_caputo(g, weights).values
        assert_allclose(left_caputo(combined, weights).values, expected, rtol=1e-12, atol=1e-12)

    def test_linear_function_approaches_continuous_value(self):
        errors = []
        for n in (16, 32, 64, 128):
            grid = TimeGrid.from_horizon(1.0, n)
            weights = build_weights(0.5, n)
            derivative = left_caputo(SampledPath.from_function(grid, lambda t: t), weights)
            errors.append(abs(derivative.values[-1] - 1.0 / gamma_fn(1.5)))
        self.assertTrue(all(b < a for a, b in zip(errors, errors[1:])), msg=errors)

    def test_field_valued_paths(self):
        grid = TimeGrid(0.05, 12)
        values = self.rng.standard_normal((13, 4, 3))
        path = SampledPath(grid=grid, values=values, cell_volume=0.2)
        weights = build_weights(0.7, 12)
        derivative = left_caputo(path, weights).values
        for node in ((0, 0), (3, 2)):
            scalar = SampledPath(grid=grid, values=values[(slice(None),) + node])
            assert_allclose(derivative[(slice(None),) + node], left_caputo(scalar, weights).values)

    def test_mismatched_weights(self):
        path = _random_path(self.rng, 10)
        with self.assertRaises(GridMismatch):
            left_caputo(path, build_weights(0.5, 9))
        with self.assertRaises(GridMismatch):
            right_caputo(path, build_weights(0.5, 9))


class ReconstructionTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(11)

    def test_zero_data(self):
        grid = TimeGrid(0.1, 8)
        weights = build_weights(0.5, 8)
        zero = SampledPath(grid=grid, values=np.zeros(9))
        assert_array_equal(ftc_reconstruct_forward(zero, 7.0, weights).values, 7.0)
        assert_array_equal(ftc_reconstruct_backward(zero, -2.0, weights).values, -2.0)

    def test_constant_data(self):
        grid = TimeGrid(0.1, 8)
        weights = build_weights(0.5, 8)
        df = SampledPath(grid=grid, values=np.full(9, 3.0))
        rebuilt = ftc_reconstruct_forward(df, 1.0, weights).values
        factor = grid.tau ** 0.5 / gamma_fn(0.5)
        expected = [1.0 + factor * 3.0 * ftc_kernel_sum(0.5, n) for n in range(9)]
        assert_allclose(rebuilt, expected, rtol=1e-14)

    def test_round_trips(self):
        for _ in range(1000):
            path = _random_path(self.rng, 64)
            weights = build_weights(0.7, 64)
            forward = ftc_reconstruct_forward(left_caputo(path, weights), path.values[0], weights)
            backward = ftc_reconstruct_backward(right_caputo(path, weights), path.values[-1], weights)
            scale = np.max(np.abs(path.values))
            self.assertLessEqual(np.max(np.abs(forward.values - path.values)), 1e-12 * scale)
            self.assertLessEqual(np.max(np.abs(backward.values - path.values)), 1e-12 * scale)

    def test_reconstruct_then_differentiate(self):
        grid = TimeGrid(1 / 32, 32)
        weights = build_weights(0.3, 32)
        df = SampledPath(grid=grid, values=np.concatenate([[0.0], self.rng.standard_normal(32)]))
        rebuilt = ftc_reconstruct_forward(df, 0.5, weights)
        assert_allclose(left_caputo(rebuilt, weights).values[1:], df.values[1:], rtol=1e-12, atol=1e-12)

    def test_nonpositive_derivative_keeps_path_below_start(self):
        grid = TimeGrid(1 / 32, 32)
        for alpha in (0.2, 0.5, 0.9):
            weights = build_weights(alpha, 32)
            for _ in range(50):
                df = SampledPath(grid=grid, values=-np.abs(self.rng.standard_normal(33)))
                self.assertLessEqual(nonpositive_derivative_bound(df, 1.0, weights), 1e-12)

    def test_field_reconstruction(self):
        grid = TimeGrid(0.1, 6)
        weights = build_weights(0.45, 6)
        path = SampledPath(grid=grid, values=self.rng.standard_normal((7, 5)))
        rebuilt = ftc_reconstruct_forward(left_caputo(path, weights), path.values[0], weights)
        assert_allclose(rebuilt.values, path.values, atol=1e-12)
        with self.assertRaises(GridMismatch):
            ftc_reconstruct_forward(path, np.zeros(4), weights)


class SquareGapTests(SimpleTestCase):
    def test_constant_path(self):
        grid = TimeGrid(0.1, 10)
        path = SampledPath(grid=grid, values=np.full(11, -4.0))
        self.assertEqual(caputo_square_gap(path, build_weights(0.5, 10), 5), 0.0)

    def test_random_paths_are_non_negative(self):
        rng = np.random.default_rng(3)
        for alpha in (0.3, 0.7):
            weights = build_weights(alpha, 64)
            for _ in range(100):
                path = _random_path(rng, 64)
                gaps = [caputo_square_gap(path, weights, k) for k in range(1, 65)]
                self.assertGreaterEqual(min(gaps), -1e-12)

    def test_classical_gap(self):
        rng = np.random.default_rng(5)
        path = _random_path(rng, 8)
        weights = build_weights(1.0, 8)
        tau = path.grid.tau
        for k in range(1, 9):
            expected = (path.values[k] - path.values[k - 1]) ** 2 / (2 * tau)
            self.assertAlmostEqual(caputo_square_gap(path, weights, k), expected, places=10)

    def test_index_range(self):
        path = SampledPath(grid=TimeGrid(0.1, 3), values=np.zeros(4))
        with self.assertRaises(DomainError):
            caputo_square_gap(path, build_weights(0.5, 3), 0)


class IntegrationByPartsTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(13)

    def test_constant_path(self):
        grid = TimeGrid(1 / 16, 16)
        path = SampledPath(grid=grid, values=np.full(17, 2.0))
        self.assertLessEqual(discrete_ibp_residual(path, np.cos, build_weights(0.6, 16)), 1e-12)

    def test_random_instances(self):
        weights = build_weights(0.6, 16)
        for phi in (lambda t: np.ones_like(t), lambda t: t, np.cos):
            for _ in range(100):
                path = _random_path(self.rng, 16)
                terms = discrete_ibp_terms(path, phi, weights)
                self.assertLessEqual(terms.residual, 1e-10 * terms.scale)

    def test_single_step(self):
        grid = TimeGrid(0.5, 1)
        path = SampledPath(grid=grid, values=[1.0, 3.0])
        terms = discrete_ibp_terms(path, lambda t: np.ones_like(t), build_weights(0.5, 1))
        self.assertEqual(terms.interior, 0.0)
        self.assertAlmostEqual(terms.lhs, terms.end - terms.start)

    def test_rejects_field_paths(self):
        path = SampledPath(grid=TimeGrid(0.1, 2), values=np.zeros((3, 2)))
        with self.assertRaises(DomainError):
            discrete_ibp_residual(path, np.cos, build_weights(0.5, 2))


class CustomWeightTableTests(SimpleTestCase):
    def test_perturbed_table_breaks_identity(self):
        weights = build_weights(0.5, 32)
        lambdas = weights.lambdas.copy()
        lambdas[9] += 1e-6
        perturbed = CaputoWeights(order=weights.order, lambdas=lambdas)
        self.assertGreater(np.max(np.abs(weight_identity_residuals(perturbed))), 1e-10)
