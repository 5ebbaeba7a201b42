import csv
import math
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from caputo.exceptions import DomainError
from caputo.grids import SampledPath, TimeGrid
from caputo.operators import left_caputo
from caputo.weights import caputo_scale, ftc_kernel_sum, ftc_scale
from spectral.fields import GridField, TorusGrid, cosine_series
from spectral.operators import dealiased, frac_laplacian, laplacian, lp_norm, mean

from .classical import backward_euler_reference, differentiation_matrix, projection_matrix
from .config import SolverConfig
from .exceptions import InvalidInitialData, NonConvergence
from .history import History
from .ledger import LEDGER_COLUMNS, MASS_TOL, diagnostics, zero_mode_identity_gap
from .refinement import refinement_study
from .stepping import (
    caputo_memory,
    density_step,
    picard_preconditioner,
    picard_solve,
    pressure_step,
    run,
    weak_form_residual,
)


def _config(**overrides):
    params = dict(
        alpha=0.5, s=0.75, grid=TorusGrid(1, 64), time=TimeGrid.from_horizon(0.5, 32),
        rho=1e-2, eps=1e-2,
    )
    params.update(overrides)
    return SolverConfig(**params)


def _smooth_data(grid):
    mode = (1,) + (0,) * (grid.dim - 1)
    return (cosine_series(grid, 1.0, [(mode, 0.5)]),
            cosine_series(grid, 1.0, [(mode, 0.3)]))


class SolverConfigTests(SimpleTestCase):
    def test_defaults(self):
        config = _config()
        self.assertEqual(config.picard_tol, 1e-10)
        self.assertEqual(config.picard_max, 200)
        self.assertEqual(config.picard_damping, 1.0)
        self.assertFalse(config.clip_negative)
        self.assertEqual(config.tol_pos, 1e-8)
        self.assertEqual(config.tau, 1 / 64)
        self.assertAlmostEqual(config.memory_scale, caputo_scale(config.alpha, 1 / 64))

    def test_validation(self):
        bad = ({'s': 0.0}, {'s': 1.5}, {'rho': -1.0}, {'eps': float('nan')}, {'picard_tol': 0.0},
               {'picard_max': 0}, {'picard_damping': 0.0}, {'picard_damping': 1.5}, {'alpha': 1.2})
        for overrides in bad:
            with self.assertRaises(DomainError, msg=overrides):
                _config(**overrides)

    def test_refined(self):
        config = _config()
        finer = config.refined('tau')
        self.assertEqual(finer.tau, config.tau / 2)
        self.assertEqual(finer.horizon, config.horizon)
        self.assertEqual(config.refined('eps').eps, config.eps / 2)
        self.assertEqual(config.refined('rho').rho, config.rho / 2)
        with self.assertRaises(DomainError):
            config.refined('s')


class MemoryTests(SimpleTestCase):
    def test_memory_completes_caputo_sum(self):
        rng = np.random.default_rng(0)
        config = _config(time=TimeGrid(0.1, 12))
        values = rng.standard_normal((13, 5))
        derivative = left_caputo(SampledPath(config.time, values), config.weights).values
        for k in range(1, 13):
            expected = config.memory_scale * (values[k] + caputo_memory(values, k, config.weights))
            assert_allclose(derivative[k], expected, rtol=1e-12, atol=1e-12)

    def test_classical_memory(self):
        config = _config(alpha=1.0, time=TimeGrid(0.1, 5))
        values = np.arange(6.0)[:, None] * np.ones((6, 3))
        assert_array_equal(caputo_memory(values, 4, config.weights), -values[3])


class PressureStepTests(SimpleTestCase):
    def test_constant_history_without_source(self):
        config = _config()
        grid = config.grid
        history = History.start(config, GridField.constant(grid, 1.0), GridField.constant(grid, 2.5))
        p = pressure_step(history, 1, GridField.zeros(grid), config)
        assert_allclose(p.samples, 2.5, rtol=1e-14)

    def test_constant_source(self):
        config = _config()
        grid = config.grid
        history = History.start(config, GridField.constant(grid, 1.0), GridField.constant(grid, 1.0))
        p = pressure_step(history, 1, GridField.constant(grid, 3.0), config)
        expected = 1.0 + ftc_scale(config.alpha, config.tau) * 9.0
        assert_allclose(p.samples, expected, rtol=1e-13)

    def test_discrete_equation_holds(self):
        rng = np.random.default_rng(1)
        config = _config(grid=TorusGrid(2, 16), time=TimeGrid(0.05, 4))
        grid = config.grid
        u_in, p_in = (dealiased(GridField(grid, 2.0 + 0.1 * rng.standard_normal(grid.shape)))
                      for _ in range(2))
        history = History.start(config, u_in, p_in)
        z = dealiased(GridField(grid, 1.0 + 0.2 * rng.standard_normal(grid.shape)))
        p = pressure_step(history, 1, z, config)
        memory = GridField(grid, caputo_memory(history.p, 1, config.weights))
        residual = (config.memory_scale * (p + memory) + frac_laplacian(p, config.s)
                    - config.eps * laplacian(p) - dealiased(z * z))
        scale = lp_norm(dealiased(z * z), 2)
        self.assertLessEqual(lp_norm(residual, 2), 1e-10 * scale)


class DensityStepTests(SimpleTestCase):
    def test_zero_iterate_keeps_constant(self):
        config = _config()
        grid = config.grid
        history = History.start(config, GridField.constant(grid, 1.7), GridField.constant(grid, 1.0))
        p = GridField.from_function(grid, np.cos)
        u = density_step(history, 1, GridField.zeros(grid), p, config)
        assert_allclose(u.samples, 1.7, rtol=1e-14)

    def test_flat_pressure_is_memory_only(self):
        config = _config(rho=0.0)
        grid = config.grid
        u_in, _ = _smooth_data(grid)
        history = History.start(config, u_in, GridField.constant(grid, 1.0))
        u = density_step(history, 1, u_in, GridField.constant(grid, 4.0), config)
        assert_allclose(u.samples, u_in.samples, atol=1e-14)

    def test_mass_is_preserved(self):
        rng = np.random.default_rng(2)
        config = _config(grid=TorusGrid(2, 16))
        grid = config.grid
        u_in = GridField(grid, 1.0 + 0.1 * rng.random(grid.shape))
        history = History.start(config, u_in, GridField.constant(grid, 1.0))
        z = GridField(grid, rng.standard_normal(grid.shape))
        p = GridField(grid, rng.standard_normal(grid.shape))
        self.assertAlmostEqual(mean(density_step(history, 1, z, p, config)), mean(u_in), delta=1e-13)


class PicardTests(SimpleTestCase):
    def test_zero_density(self):
        config = _config()
        grid = config.grid
        _, p_in = _smooth_data(grid)
        history = History.start(config, GridField.zeros(grid), p_in)
        u, p, report = picard_solve(history, 1, config)
        self.assertEqual(report.picard_iters, 1)
        assert_array_equal(u.samples, 0.0)
        assert_allclose(p.samples, pressure_step(history, 1, GridField.zeros(grid), config).samples)

    def test_reports_step(self):
        config = _config()
        u_in, p_in = _smooth_data(config.grid)
        history = History.start(config, u_in, p_in)
        u, p, report = picard_solve(history, 1, config)
        self.assertEqual(report.k, 1)
        self.assertLessEqual(report.picard_residual, config.picard_tol)
        self.assertEqual(report.min_u, u.min())
        self.assertEqual(report.min_p, p.min())
        with self.assertRaises(DomainError):
            picard_solve(history, 2, config)

    def test_non_convergence(self):
        config = _config(picard_max=2, picard_tol=1e-14)
        u_in, p_in = _smooth_data(config.grid)
        history = History.start(config, u_in, p_in)
        with self.assertRaises(NonConvergence) as ctx:
            picard_solve(history, 1, config)
        self.assertEqual(ctx.exception.step, 1)
        self.assertEqual(len(ctx.exception.residuals), 2)

    def test_damped_iteration_converges_to_same_step(self):
        u_in, p_in = _smooth_data(TorusGrid(1, 64))
        plain = _config()
        damped = _config(picard_damping=0.6)
        u_plain, _, _ = picard_solve(History.start(plain, u_in, p_in), 1, plain)
        u_damped, _, report = picard_solve(History.start(damped, u_in, p_in), 1, damped)
        assert_allclose(u_damped.samples, u_plain.samples, atol=1e-8)
        self.assertLessEqual(report.weak_residual, 10 * damped.picard_tol)

    def test_preconditioner_weights(self):
        config = _config()
        u_in, _ = _smooth_data(config.grid)
        weights = picard_preconditioner(u_in, config)
        self.assertEqual(weights[0], 1.0)
        self.assertTrue(np.all(weights > 0.0))
        self.assertTrue(np.all(weights <= 1.0))
        self.assertLess(weights.min(), 0.9)
        assert_array_equal(picard_preconditioner(GridField.zeros(config.grid), config), 1.0)

    def test_converges_where_plain_iteration_oscillates(self):
        config = _config(s=0.6, grid=TorusGrid(1, 32), time=TimeGrid.from_horizon(0.25, 16))
        history, ledger = run(config, *_smooth_data(config.grid))
        self.assertLessEqual(int(ledger.picard_iters.max()), 30)
        self.assertTrue(all(r.picard_residual <= config.picard_tol for r in history.reports))
        self.assertLessEqual(ledger.weak_residual.max(), 10 * config.picard_tol)


class RunTests(SimpleTestCase):
    def test_rejects_bad_initial_data(self):
        config = _config()
        grid = config.grid
        u_in, p_in = _smooth_data(grid)
        negative = cosine_series(grid, 0.2, [((1,), 0.5)])
        with self.assertRaises(InvalidInitialData):
            run(config, negative, p_in)
        with self.assertRaises(InvalidInitialData):
            run(config, u_in, GridField.zeros(grid))
        with self.assertRaises(InvalidInitialData):
            run(config, GridField.constant(TorusGrid(1, 32), 1.0), p_in)

    def test_acceptance_run(self):
        config = _config()
        u_in, p_in = _smooth_data(config.grid)
        history, ledger = run(config, u_in, p_in)
        self.assertTrue(history.complete)
        report = diagnostics(history, ledger, config)
        self.assertTrue(report['passed'], msg=report['verdicts'])
        self.assertLessEqual(report['mass_drift'], 1e-12)
        self.assertGreaterEqual(report['min_value'], -1e-8)
        self.assertLessEqual(report['max_picard_iters'], 30)
        self.assertLessEqual(report['zero_mode_gap'], 1e-10)
        self.assertEqual(len(report['rows']), 33)
        self.assertTrue(np.all(ledger.energy + ledger.dissipation_sum <= ledger.h0 * (1 + 1e-6)))
        self.assertTrue(np.all(ledger.mean_p >= ledger.mean_p[0] - 1e-12))

    def test_constant_data(self):
        a, c = 2.0, 1.0
        config = _config(time=TimeGrid.from_horizon(0.5, 16))
        grid = config.grid
        history, ledger = run(config, GridField.constant(grid, a), GridField.constant(grid, c))
        for k in range(17):
            assert_allclose(history.u[k], a, rtol=1e-13)
        for k in (1, 5, 16):
            expected = c + ftc_scale(config.alpha, config.tau) * ftc_kernel_sum(config.alpha, k) * a * a
            self.assertAlmostEqual(ledger.mean_p[k], expected, delta=1e-12 * expected)
        assert_allclose(ledger.energy, 2 * math.pi * a * a, rtol=1e-12)
        assert_allclose(ledger.dissipation_sum, 0.0, atol=1e-20)
        self.assertAlmostEqual(ledger.l3_accum[-1], 0.5 * 2 * math.pi * a ** 3, delta=1e-10)
        self.assertTrue(diagnostics(history, ledger)['passed'])

    def test_classical_limit_matches_backward_euler(self):
        config = _config(alpha=1.0, s=1.0, rho=0.0, eps=0.0, time=TimeGrid.from_horizon(0.5, 64),
                         picard_tol=1e-12)
        u_in, p_in = _smooth_data(config.grid)
        history, ledger = run(config, u_in, p_in)
        reference = backward_euler_reference(u_in.samples, p_in.samples, config.tau, 64)
        for k, (u_ref, p_ref) in enumerate(reference, start=1):
            assert_allclose(history.u[k], u_ref, atol=1e-8, err_msg=f'u at step {k}')
            assert_allclose(history.p[k], p_ref, atol=1e-8, err_msg=f'p at step {k}')
        self.assertTrue(np.all(ledger.energy + ledger.dissipation_sum <= ledger.h0 * (1 + 1e-6)))

    def test_classical_order_with_viscosity(self):
        config = _config(alpha=1.0, time=TimeGrid.from_horizon(0.25, 16))
        u_in, p_in = _smooth_data(config.grid)
        history, ledger = run(config, u_in, p_in)
        self.assertTrue(diagnostics(history, ledger)['verdicts']['energy'])
        self.assertTrue(np.all(np.diff(ledger.energy) <= 1e-12))

    def test_three_dimensional_smoke(self):
        grid = TorusGrid(3, 16)
        config = _config(grid=grid, time=TimeGrid.from_horizon(0.25, 16))
        u_in = cosine_series(grid, 1.0, [((1, 0, 0), 0.3), ((0, 1, 1), 0.2)])
        p_in = cosine_series(grid, 1.0, [((0, 1, 0), 0.2), ((1, 0, 1), 0.1)])
        history, ledger = run(config, u_in, p_in)
        report = diagnostics(history, ledger)
        self.assertTrue(report['passed'], msg=report['verdicts'])

    def test_l3_accumulator_is_resolution_stable(self):
        totals = []
        for points in (32, 64):
            config = _config(s=0.6, grid=TorusGrid(1, points), time=TimeGrid.from_horizon(0.25, 16))
            _, ledger = run(config, *_smooth_data(config.grid))
            totals.append(ledger.l3_accum[-1])
        self.assertLess(abs(totals[1] - totals[0]), 0.05 * totals[1])

    def test_tighter_tolerance_tightens_residual(self):
        worst = []
        for tol in (1e-6, 1e-11):
            config = _config(picard_tol=tol, time=TimeGrid.from_horizon(0.125, 8))
            history, ledger = run(config, *_smooth_data(config.grid))
            self.assertLessEqual(ledger.weak_residual.max(), 10 * tol)
            self.assertAlmostEqual(weak_form_residual(history, 8), history.reports[-1].weak_residual,
                                   delta=1e-15 + 1e-9 * tol)
            worst.append(ledger.weak_residual.max())
        self.assertLess(worst[1], worst[0])

    def test_clipping_clears_certification(self):
        config = _config(clip_negative=True, time=TimeGrid.from_horizon(0.125, 8))
        history, ledger = run(config, *_smooth_data(config.grid))
        self.assertFalse(ledger.certified)
        report = diagnostics(history, ledger)
        self.assertFalse(report['verdicts']['certified'])
        self.assertFalse(report['passed'])

    def test_zero_mode_identity(self):
        config = _config(alpha=0.3, time=TimeGrid.from_horizon(0.25, 16))
        history, _ = run(config, *_smooth_data(config.grid))
        self.assertLessEqual(zero_mode_identity_gap(history), 1e-10)


class LedgerCsvTests(SimpleTestCase):
    def test_columns_and_stability(self):
        config = _config(time=TimeGrid.from_horizon(0.125, 8))
        _, ledger = run(config, *_smooth_data(config.grid))
        with tempfile.TemporaryDirectory() as tmp:
            first = ledger.to_csv(Path(tmp) / 'a' / 'ledger.csv').read_bytes()
            second = ledger.to_csv(Path(tmp) / 'ledger.csv').read_bytes()
            with (Path(tmp) / 'ledger.csv').open(newline='') as handle:
                rows = list(csv.reader(handle))
        self.assertEqual(first, second)
        self.assertEqual(tuple(rows[0]), LEDGER_COLUMNS)
        self.assertEqual(len(rows), 10)
        self.assertEqual(rows[0][0], 'step')
        self.assertEqual(float(rows[1][3]), 0.0)
        self.assertEqual(float(rows[5][2]), ledger.energy[4])
        self.assertEqual(rows[9][-1], str(ledger.picard_iters[8]))


class RefinementTests(SimpleTestCase):
    def setUp(self):
        self.u_in, self.p_in = _smooth_data(TorusGrid(1, 32))

    def _config(self, n_steps=8):
        return _config(grid=TorusGrid(1, 32), time=TimeGrid.from_horizon(0.5, n_steps))

    def test_time_refinement(self):
        report = refinement_study(self._config(), self.u_in, self.p_in, 'tau', 4)
        self.assertEqual([lvl.value for lvl in report.levels], [1 / 16, 1 / 32, 1 / 64, 1 / 128])
        self.assertIsNone(report.levels[0].diff_u)
        self.assertTrue(report.non_increasing, msg=(report.diffs_u, report.diffs_p))
        self.assertTrue(all(lvl.psi > 0 for lvl in report.levels))

    def test_pressure_viscosity_refinement(self):
        report = refinement_study(self._config(), self.u_in, self.p_in, 'eps', 3)
        self.assertLess(report.diffs_p[-1], report.diffs_p[-2])
        self.assertTrue(report.non_increasing)

    def test_density_viscosity_refinement(self):
        report = refinement_study(self._config(), self.u_in, self.p_in, 'rho', 3)
        self.assertTrue(report.non_increasing, msg=(report.diffs_u, report.diffs_p))

    def test_finest_viscosity_levels_converge(self):
        for knob in ('rho', 'eps'):
            config = self._config().refined(knob).refined(knob)
            history, ledger = run(config, self.u_in, self.p_in)
            self.assertTrue(history.complete, msg=knob)
            self.assertTrue(all(r.picard_residual <= config.picard_tol for r in history.reports), msg=knob)
            self.assertLessEqual(ledger.weak_residual.max(), 10 * config.picard_tol, msg=knob)

    def test_rejects_bad_requests(self):
        with self.assertRaises(DomainError):
            refinement_study(self._config(), self.u_in, self.p_in, 'tau', 1)
        with self.assertRaises(DomainError):
            refinement_study(self._config(), self.u_in, self.p_in, 'alpha', 3)


class DiagnosticsTests(SimpleTestCase):
    def test_mass_verdict_is_absolute(self):
        config = _config(time=TimeGrid.from_horizon(0.125, 8))
        grid = config.grid
        history, ledger = run(config, GridField.constant(grid, 4.0), GridField.constant(grid, 1.0))
        self.assertTrue(diagnostics(history, ledger)['verdicts']['mass'])
        drifted = replace(ledger, mean_u=ledger.mean_u + np.r_[0.0, np.full(8, 2 * MASS_TOL)])
        report = diagnostics(history, drifted)
        self.assertFalse(report['verdicts']['mass'])
        self.assertFalse(report['passed'])


class ClassicalReferenceTests(SimpleTestCase):
    def setUp(self):
        self.x = 2 * math.pi * np.arange(32) / 32

    def test_differentiation_is_spectral(self):
        d = differentiation_matrix(32)
        assert_allclose(d @ np.sin(3 * self.x), 3 * np.cos(3 * self.x), atol=1e-12)
        assert_allclose(d @ np.cos(16 * self.x), 0.0, atol=1e-12)
        assert_allclose(d @ np.ones(32), 0.0, atol=1e-13)
        with self.assertRaises(DomainError):
            differentiation_matrix(15)

    def test_projection_keeps_two_thirds_band(self):
        project = projection_matrix(32)
        assert_allclose(project @ np.cos(10 * self.x), np.cos(10 * self.x), atol=1e-12)
        assert_allclose(project @ np.sin(11 * self.x), 0.0, atol=1e-12)
        assert_allclose(project @ project, project, atol=1e-13)

    def test_constant_density_is_stationary(self):
        out = backward_euler_reference(np.full(16, 2.0), np.full(16, 1.0), 0.1, 3)
        for k, (u, p) in enumerate(out, start=1):
            assert_allclose(u, 2.0, rtol=1e-13)
            assert_allclose(p, 1.0 + 0.4 * k, rtol=1e-12)

    def test_rejects_mismatched_data(self):
        with self.assertRaises(DomainError):
            backward_euler_reference(np.ones(16), np.ones(8), 0.1, 1)
