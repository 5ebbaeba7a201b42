import csv
import json
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

import numpy as np
from django.core.management import call_command
from django.test import SimpleTestCase, override_settings

from caputo.exceptions import DomainError
from caputo.grids import FractionalOrder
from caputo.weights import ftc_kernel_sum, ftc_scale
from compactness import shifts
from solver.exceptions import InvalidInitialData, NonConvergence
from spectral.snapshots import read_snapshot

from .artifacts import snapshot_steps
from .base import EXIT_BAD_INPUT, EXIT_NON_CONVERGENCE, EXIT_VERIFICATION_FAILED
from .forms import RunConfigForm
from .rng import make_rng, resolve_seed
from .runconfig import RunConfigError, load_run_config, parse_run_config
from .suites import SOLVER_BLOCKS, compactness_suite, parse_perturbation, run_suites

CONFIG_DIR = Path(__file__).resolve().parent.parent / 'configs'


def _document(**overrides):
    document = {
        'alpha': 0.5, 's': 0.75, 'dim': 1, 'points': 32, 'horizon': 0.25, 'n_steps': 8,
        'rho': 0.01, 'eps': 0.01,
        'u_in': {'offset': 1.0, 'modes': [[[1], 0.5]]},
        'p_in': {'offset': 1.0, 'modes': [[[1], 0.3]]},
    }
    document.update(overrides)
    return document


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def write_config(self, document, name='run.json'):
        path = self.tmp / name
        path.write_text(json.dumps(document), encoding='utf-8')
        return path

    def call(self, *args, **kwargs):
        out, err = StringIO(), StringIO()
        call_command(*args, stdout=out, stderr=err, **kwargs)
        return out.getvalue(), err.getvalue()

    def assertExits(self, code, *args, **kwargs):
        with self.assertRaises(SystemExit) as ctx:
            self.call(*args, **kwargs)
        self.assertEqual(ctx.exception.code, code)


class RunConfigFormTests(SimpleTestCase):
    def test_valid_document(self):
        form = RunConfigForm(data=_document())
        self.assertTrue(form.is_valid(), form.errors)
        self.assertEqual(form.cleaned_data['u_in'], {'offset': 1.0, 'modes': [((1,), 0.5)]})
        self.assertEqual(form.solver_options(), {'rho': 0.01, 'eps': 0.01, 'clip_negative': False})

    def test_tau_gives_step_count(self):
        document = _document(tau=0.03125)
        del document['n_steps']
        form = RunConfigForm(data=document)
        self.assertTrue(form.is_valid(), form.errors)
        self.assertEqual(form.cleaned_data['n_steps'], 8)

    def test_invalid_documents(self):
        no_steps = _document()
        del no_steps['n_steps']
        cases = {
            'n_steps': no_steps,
            'tau': _document(tau=0.1),
            'points': _document(points=33),
            'alpha': _document(alpha=0.0),
            's': _document(s=1.5),
            'picard_damping': _document(picard_damping=0.0),
            'u_in': _document(u_in={'offset': 1.0, 'modes': [[[1, 0], 0.5]]}),
            'p_in': _document(p_in={'offset': 1.0, 'modes': [['x', 0.5]]}),
        }
        for field, document in cases.items():
            form = RunConfigForm(data=document)
            self.assertFalse(form.is_valid(), field)
            self.assertIn(field, form.errors)

    def test_parse_builds_solver_config(self):
        config = parse_run_config(_document(picard_tol=1e-9, snapshot_every=2, seed=7))
        self.assertEqual(config.solver.n_steps, 8)
        self.assertEqual(config.solver.picard_tol, 1e-9)
        self.assertEqual(config.solver.grid.points, 32)
        self.assertEqual(config.snapshot_every, 2)
        self.assertEqual(config.seed, 7)
        u_in, _ = config.initial_fields()
        self.assertAlmostEqual(u_in.max(), 1.5)

    def test_parse_rejects_negative_nodes(self):
        with self.assertRaises(InvalidInitialData):
            parse_run_config(_document(u_in={'offset': 0.2, 'modes': [[[1], 0.5]]}))

    def test_parse_errors(self):
        with self.assertRaises(RunConfigError):
            parse_run_config([1, 2])
        with self.assertRaises(RunConfigError) as ctx:
            parse_run_config(_document(dim=4))
        self.assertIn('dim', ctx.exception.errors)
        with tempfile.TemporaryDirectory() as tmp:
            bad = Path(tmp) / 'bad.json'
            bad.write_text('{not json', encoding='utf-8')
            with self.assertRaises(RunConfigError):
                load_run_config(bad)
            with self.assertRaises(RunConfigError):
                load_run_config(Path(tmp) / 'missing.json')

    def test_shipped_configs_load(self):
        for name in ('smooth.json', 'constants.json', 'torus3d.json'):
            config = load_run_config(CONFIG_DIR / name)
            self.assertGreater(config.solver.n_steps, 0)


class RngTests(SimpleTestCase):
    def test_reproducible(self):
        np.testing.assert_array_equal(make_rng(5).random(8), make_rng(5).random(8))
        self.assertFalse(np.array_equal(make_rng(5).random(8), make_rng(6).random(8)))

    @override_settings(FRACPME_SEED=11)
    def test_default_seed_from_settings(self):
        self.assertEqual(resolve_seed(None), 11)

    def test_rejects_bad_seed(self):
        for seed in (-1, 2 ** 64, 1.5):
            with self.assertRaises(DomainError):
                resolve_seed(seed)


class SuiteTests(SimpleTestCase):
    def test_perturbation_parsing(self):
        self.assertEqual(parse_perturbation('10:1e-6'), (10, 1e-6))
        self.assertIsNone(parse_perturbation(None))
        for text in ('10', 'a:1', '0:1e-6', '3:nan'):
            with self.assertRaises(DomainError):
                parse_perturbation(text)

    def test_deterministic_summary(self):
        first = run_suites('ibp', seed=3)
        self.assertTrue(first['passed'], first['first_failure'])
        self.assertEqual(first, run_suites('ibp', seed=3))

    def test_unknown_suite(self):
        with self.assertRaises(DomainError):
            run_suites('everything')

    def test_compactness_suite_draws_a_thousand_interpolants(self):
        with mock.patch('cli.suites.interpolant_shift_check', wraps=shifts.interpolant_shift_check) as check:
            checks = compactness_suite(make_rng(0))
        self.assertEqual(check.call_count, 1000 * 3 * 3)
        self.assertEqual({c.args[1] for c in check.call_args_list}, {0.25, 0.5, 0.75})
        self.assertTrue(all(c.passed for c in checks), msg=[c.as_dict() for c in checks if not c.passed])

    def test_solver_suite_has_classical_and_refinement_checks(self):
        checks = SOLVER_BLOCKS['classical limit']() + SOLVER_BLOCKS['refinement']()
        self.assertEqual([c.name for c in checks], [
            'classical limit matches backward Euler',
            'refinement tau: differences non-increasing',
            'refinement eps: differences non-increasing',
            'refinement rho: differences non-increasing',
        ])
        self.assertTrue(all(c.passed for c in checks), msg=[c.as_dict() for c in checks])

    def test_snapshot_steps(self):
        self.assertEqual(snapshot_steps(32, 8), [0, 8, 16, 24, 32])
        self.assertEqual(snapshot_steps(10, 4), [0, 4, 8, 10])
        self.assertEqual(snapshot_steps(10, 0), [])


class WeightsCommandTests(CommandTestCase):
    def _rows(self, path):
        with path.open(newline='') as handle:
            return list(csv.reader(handle))

    def test_classical_order(self):
        path = self.tmp / 'w.csv'
        out, _ = self.call('weights', alpha=1.0, n=5, out=str(path))
        rows = self._rows(path)
        self.assertEqual(rows[0], ['k', 'lambda_k'])
        self.assertEqual(rows[1], ['1', '1'])
        self.assertEqual(float(rows[2][1]), 0.0)
        self.assertIn('Wrote 5 weights', out)

    def test_decay_bound(self):
        self.call('weights', alpha=0.5, n=200, out=str(self.tmp))
        rows = self._rows(self.tmp / 'weights.csv')[1:]
        for k, lam in rows:
            self.assertLessEqual(float(lam), int(k) ** -0.5)

    def test_single_weight(self):
        path = self.tmp / 'one.csv'
        self.call('weights', alpha=0.3, n=1, out=str(path))
        self.assertEqual(self._rows(path), [['k', 'lambda_k'], ['1', '1']])

    def test_bad_input(self):
        self.assertExits(EXIT_BAD_INPUT, 'weights', alpha=1.5, n=5, out=str(self.tmp))
        self.assertExits(EXIT_BAD_INPUT, 'weights', alpha=0.5, n=0, out=str(self.tmp))


class VerifyCommandTests(CommandTestCase):
    def test_weights_suite_passes(self):
        out, err = self.call('verify', 'weights')
        summary = json.loads(out)
        self.assertTrue(summary['passed'])
        self.assertEqual(summary['seed'], 42)
        self.assertIn('checks passed', err)

    def test_perturbed_weights_fail(self):
        report = self.tmp / 'summary.json'
        with self.assertRaises(SystemExit) as ctx:
            self.call('verify', 'weights', perturb_lambda='10:1e-6', out=str(report))
        self.assertEqual(ctx.exception.code, EXIT_VERIFICATION_FAILED)
        summary = json.loads(report.read_text())
        self.assertFalse(summary['passed'])
        self.assertIn('identity', summary['first_failure'])

    def test_seeded_runs_are_identical(self):
        first, _ = self.call('verify', 'spectral', seed=9)
        second, _ = self.call('verify', 'spectral', seed=9)
        self.assertEqual(first, second)
        self.assertTrue(json.loads(first)['passed'])

    def test_bad_perturbation(self):
        self.assertExits(EXIT_BAD_INPUT, 'verify', 'weights', perturb_lambda='k:1')

    def test_solver_failure_is_a_failed_check(self):
        def diverging():
            raise NonConvergence(1, [1.0, float('inf')])

        report = self.tmp / 'summary.json'
        with mock.patch.dict(SOLVER_BLOCKS, {'acceptance run': diverging}, clear=True):
            with self.assertRaises(SystemExit) as ctx:
                self.call('verify', 'solver', out=str(report))
        self.assertEqual(ctx.exception.code, EXIT_VERIFICATION_FAILED)
        summary = json.loads(report.read_text())
        self.assertFalse(summary['passed'])
        self.assertEqual(summary['first_failure'], 'solver: acceptance run: NonConvergence')
        self.assertEqual(summary['checks'], [{
            'suite': 'solver', 'name': 'acceptance run: NonConvergence', 'passed': False,
            'value': 'nan', 'limit': 'nan',
        }])


class SolveCommandTests(CommandTestCase):
    def test_constant_config_matches_scalar_oracle(self):
        out_dir = self.tmp / 'constants'
        self.call('solve', config=str(CONFIG_DIR / 'constants.json'), out=str(out_dir))
        with (out_dir / 'ledger.csv').open(newline='') as handle:
            rows = list(csv.DictReader(handle))
        self.assertEqual(len(rows), 17)
        tau, alpha = 0.5 / 16, FractionalOrder.coerce(0.5)
        for row in rows[1:]:
            k = int(row['step'])
            expected = 1.0 + ftc_scale(alpha, tau) * ftc_kernel_sum(alpha, k) * 4.0
            self.assertAlmostEqual(float(row['mean_p']), expected, delta=1e-12 * expected)
            self.assertAlmostEqual(float(row['mean_u']), 2.0, delta=1e-13)
        self.assertEqual(list(out_dir.glob('*.fld')), [])

    def test_smooth_run_writes_artifacts(self):
        config = self.write_config(_document(snapshot_every=4))
        out, _ = self.call('solve', config=str(config), out=str(self.tmp / 'run'), seed=5)
        run_dir = self.tmp / 'run'
        diagnostics = json.loads((run_dir / 'diagnostics.json').read_text())
        self.assertTrue(diagnostics['passed'])
        self.assertEqual(diagnostics['seed'], 5)
        self.assertEqual(len(diagnostics['steps']), 8)
        self.assertEqual(sorted(p.name for p in run_dir.glob('u_*.fld')), ['u_0.fld', 'u_4.fld', 'u_8.fld'])
        field, t = read_snapshot(run_dir / 'p_8.fld')
        self.assertEqual(field.grid.points, 32)
        self.assertEqual(t, 0.25)
        self.assertIn('All diagnostics passed', out)

    def test_outputs_are_byte_stable(self):
        config = self.write_config(_document(snapshot_every=8))
        for name in ('a', 'b'):
            self.call('solve', config=str(config), out=str(self.tmp / name))
        for artifact in ('ledger.csv', 'diagnostics.json', 'u_8.fld', 'p_8.fld'):
            self.assertEqual((self.tmp / 'a' / artifact).read_bytes(), (self.tmp / 'b' / artifact).read_bytes())

    def test_negative_initial_data(self):
        config = self.write_config(_document(u_in={'offset': 0.2, 'modes': [[[1], 0.5]]}))
        self.assertExits(EXIT_BAD_INPUT, 'solve', config=str(config), out=str(self.tmp / 'never'))
        self.assertFalse((self.tmp / 'never').exists())

    def test_non_convergence(self):
        config = self.write_config(_document(picard_max=1, picard_tol=1e-14))
        self.assertExits(EXIT_NON_CONVERGENCE, 'solve', config=str(config), out=str(self.tmp))

    def test_missing_config(self):
        self.assertExits(EXIT_BAD_INPUT, 'solve', config=str(self.tmp / 'missing.json'), out=str(self.tmp))


class RefineCommandTests(CommandTestCase):
    def test_time_refinement(self):
        config = self.write_config(_document(horizon=0.5, n_steps=4))
        out, _ = self.call('refine', config=str(config), knob='tau', levels=3, out=str(self.tmp))
        with (self.tmp / 'refine_tau.csv').open(newline='') as handle:
            rows = list(csv.reader(handle))
        self.assertEqual(rows[0], ['level', 'value', 'diff_u', 'diff_p', 'psi'])
        self.assertEqual(len(rows), 4)
        self.assertEqual(rows[1][2], '')
        self.assertEqual(float(rows[3][1]), 0.5 / 16)
        self.assertIn('non-increasing', out)

    def test_single_level_rejected(self):
        config = self.write_config(_document())
        self.assertExits(EXIT_BAD_INPUT, 'refine', config=str(config), knob='eps', levels=1, out=str(self.tmp))
