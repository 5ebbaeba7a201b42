import math

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from caputo.exceptions import DomainError, GridMismatch
from caputo.grids import SampledPath, TimeGrid
from caputo.weights import build_weights, gamma_fn
from oracle.functions import SmoothFunction
from oracle.integrals import continuous_left_caputo

from .interpolants import LinearInterpolant, interpolant_caputo, interpolant_caputo_norm
from .shifts import (
    constant_to_piecewise_gap,
    empirical_shift_constant,
    interpolant_shift_check,
    mu_coefficient_scan,
    mu_envelope,
    piecewise_shift_check,
)

EXPONENTS = (1, 2, math.inf)


def _random_path(rng, n, horizon=1.0):
    return SampledPath(grid=TimeGrid.from_horizon(horizon, n), values=rng.standard_normal(n + 1))


class InterpolantTests(SimpleTestCase):
    def test_matches_nodes(self):
        rng = np.random.default_rng(2)
        path = _random_path(rng, 12)
        interp = LinearInterpolant(path)
        assert_array_equal(interp(path.grid.times()), path.values)

    def test_linear_between_nodes(self):
        path = SampledPath(grid=TimeGrid(0.5, 2), values=[0.0, 1.0, -1.0])
        assert_allclose(interp_values := LinearInterpolant(path)([0.25, 0.75]), [0.5, 0.0])
        self.assertEqual(interp_values.shape, (2,))

    def test_field_values(self):
        rng = np.random.default_rng(4)
        path = SampledPath(grid=TimeGrid(0.25, 4), values=rng.standard_normal((5, 3)))
        mid = LinearInterpolant(path)(0.375)
        assert_allclose(mid[0], 0.5 * (path.values[1] + path.values[2]))

    def test_outside_domain(self):
        path = SampledPath(grid=TimeGrid(0.5, 2), values=[0.0, 1.0, 2.0])
        with self.assertRaises(DomainError):
            LinearInterpolant(path)(1.5)


class InterpolantCaputoTests(SimpleTestCase):
    def test_constant_path(self):
        path = SampledPath(grid=TimeGrid(0.1, 10), values=np.full(11, 2.0))
        assert_array_equal(interpolant_caputo(LinearInterpolant(path), 0.5, np.linspace(0, 1, 7)), 0.0)

    def test_single_jump(self):
        tau = 0.125
        values = np.ones(9)
        values[0] = 0.0
        interp = LinearInterpolant(SampledPath(grid=TimeGrid(tau, 8), values=values))
        t = np.linspace(0.0, tau, 9)
        expected = t ** 0.6 / (tau * gamma_fn(1.6))
        assert_allclose(interpolant_caputo(interp, 0.4, t), expected, rtol=1e-12, atol=1e-14)

    def test_matches_quadrature_oracle(self):
        rng = np.random.default_rng(9)
        path = _random_path(rng, 8)
        interp = LinearInterpolant(path)
        exact = SmoothFunction.piecewise_linear(path.grid.times(), path.values)
        times = np.concatenate([path.grid.times()[1:], path.grid.times()[:-1] + 0.5 * path.grid.tau])
        closed = interpolant_caputo(interp, 0.45, times)
        for t, value in zip(times, closed):
            self.assertAlmostEqual(value, continuous_left_caputo(exact, t, 0.45), delta=1e-8)

    def test_rejects_classical_order(self):
        path = SampledPath(grid=TimeGrid(0.1, 2), values=[0.0, 1.0, 2.0])
        with self.assertRaises(DomainError):
            interpolant_caputo(LinearInterpolant(path), 1.0, 0.1)

    def test_norm_of_linear_function(self):
        grid = TimeGrid.from_horizon(1.0, 8)
        interp = LinearInterpolant(SampledPath.from_function(grid, lambda t: t))
        sup = interpolant_caputo_norm(interp, 0.5, math.inf)
        self.assertAlmostEqual(sup, 1.0 / gamma_fn(1.5), places=12)


class PiecewiseShiftTests(SimpleTestCase):
    def test_constant_path(self):
        path = SampledPath(grid=TimeGrid(0.1, 10), values=np.full(11, 1.5))
        report = piecewise_shift_check(path, build_weights(0.5, 10), 2)
        self.assertEqual(report.shift_norm, 0.0)
        self.assertEqual(report.ratio, 0.0)

    def test_random_paths(self):
        rng = np.random.default_rng(21)
        for n in (16, 64):
            for alpha in (0.25, 0.5, 0.75):
                weights = build_weights(alpha, n)
                for _ in range(30):
                    path = _random_path(rng, n)
                    for p in EXPONENTS:
                        self.assertLessEqual(piecewise_shift_check(path, weights, p).ratio, 1.0 + 1e-9)

    def test_classical_order_constant(self):
        rng = np.random.default_rng(22)
        path = _random_path(rng, 32)
        report = piecewise_shift_check(path, build_weights(1.0, 32), 1)
        self.assertAlmostEqual(report.constant, 4.0 * path.grid.tau)
        self.assertGreaterEqual(report.bound, report.shift_norm)

    def test_field_paths(self):
        rng = np.random.default_rng(23)
        path = SampledPath(grid=TimeGrid(1 / 16, 16), values=rng.standard_normal((17, 8)), cell_volume=0.5)
        for p in EXPONENTS:
            self.assertLessEqual(piecewise_shift_check(path, build_weights(0.5, 16), p).ratio, 1.0 + 1e-9)

    def test_bad_exponent(self):
        path = SampledPath(grid=TimeGrid(0.1, 2), values=[0.0, 1.0, 2.0])
        with self.assertRaises(DomainError):
            piecewise_shift_check(path, build_weights(0.5, 2), 3)


class InterpolantShiftTests(SimpleTestCase):
    def test_constant_path(self):
        path = SampledPath(grid=TimeGrid(0.1, 10), values=np.full(11, -3.0))
        self.assertEqual(interpolant_shift_check(LinearInterpolant(path), 0.5, 0.1, 1).ratio, 0.0)

    def test_random_paths(self):
        rng = np.random.default_rng(31)
        for alpha in (0.25, 0.5, 0.75):
            for _ in range(10):
                path = _random_path(rng, 16)
                interp = LinearInterpolant(path)
                tau = path.grid.tau
                for h in (tau / 2, tau, 2 * tau):
                    for p in EXPONENTS:
                        report = interpolant_shift_check(interp, alpha, h, p)
                        self.assertLessEqual(report.ratio, 1.0 + 1e-9, msg=(alpha, h, p))

    def test_linear_function(self):
        grid = TimeGrid.from_horizon(1.0, 20)
        interp = LinearInterpolant(SampledPath.from_function(grid, lambda t: t))
        report = interpolant_shift_check(interp, 0.5, 0.1, math.inf)
        self.assertAlmostEqual(report.shift_norm, 0.1)
        self.assertLessEqual(report.ratio, 1.0)

    def test_exact_piece_integrals(self):
        grid = TimeGrid.from_horizon(1.0, 4)
        interp = LinearInterpolant(SampledPath.from_function(grid, lambda t: t))
        for p in (1, 2):
            report = interpolant_shift_check(interp, 0.5, 0.25, p)
            self.assertAlmostEqual(report.shift_norm, 0.25 * 0.75 ** (1.0 / p))

    def test_shift_range(self):
        path = SampledPath(grid=TimeGrid(0.5, 2), values=[0.0, 1.0, 2.0])
        with self.assertRaises(DomainError):
            interpolant_shift_check(LinearInterpolant(path), 0.5, 1.0, 2)


class MuScanTests(SimpleTestCase):
    def test_single_cell(self):
        for alpha in (0.2, 0.5, 0.9):
            self.assertLessEqual(mu_coefficient_scan(alpha, 1, 64), 1.0 + 1e-15)

    def test_bounded_by_envelope(self):
        for n in (8, 32, 128):
            self.assertLessEqual(mu_coefficient_scan(0.5, n), mu_envelope(0.5))

    def test_uniform_in_n(self):
        coarse = mu_coefficient_scan(0.5, 32)
        fine = mu_coefficient_scan(0.5, 128)
        self.assertLess(abs(fine - coarse), 0.1 * max(coarse, fine))

    def test_empirical_constant_is_finite(self):
        value = empirical_shift_constant(0.5, 32)
        self.assertTrue(np.isfinite(value) and value > 0.0)


class GapTests(SimpleTestCase):
    def test_constant_path(self):
        path = SampledPath(grid=TimeGrid(0.1, 10), values=np.full(11, 4.0))
        self.assertEqual(constant_to_piecewise_gap(path, LinearInterpolant(path), 2), 0.0)

    def test_first_cell_is_outside_the_norm(self):
        values = np.full(11, 1.0)
        values[0] = 0.0
        path = SampledPath(grid=TimeGrid(0.1, 10), values=values)
        for p in EXPONENTS:
            self.assertEqual(constant_to_piecewise_gap(path, LinearInterpolant(path), p), 0.0)
        values[1] = 2.0
        path = path.with_values(values)
        self.assertAlmostEqual(constant_to_piecewise_gap(path, LinearInterpolant(path), 2),
                               math.sqrt(0.1 / 3.0), places=14)

    def test_gap_below_shift(self):
        rng = np.random.default_rng(41)
        weights = build_weights(0.5, 64)
        for _ in range(50):
            path = _random_path(rng, 64)
            interp = LinearInterpolant(path)
            for p in EXPONENTS:
                shift = piecewise_shift_check(path, weights, p).shift_norm
                self.assertLessEqual(constant_to_piecewise_gap(path, interp, p), shift)

    def test_gap_vanishes_under_refinement(self):
        gaps = []
        for n in (16, 32, 64, 128, 256):
            path = SampledPath.from_function(TimeGrid.from_horizon(1.0, n), np.sin)
            gaps.append(constant_to_piecewise_gap(path, LinearInterpolant(path), 2))
        self.assertTrue(all(b < a for a, b in zip(gaps, gaps[1:])), msg=gaps)

    def test_foreign_interpolant(self):
        rng = np.random.default_rng(42)
        with self.assertRaises(GridMismatch):
            constant_to_piecewise_gap(_random_path(rng, 4), LinearInterpolant(_random_path(rng, 4)), 1)
