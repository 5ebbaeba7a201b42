"""
Management command to run a refinement study in tau, eps or rho
"""
from caputo.exceptions import CaputoError
from cli.artifacts import write_refinement_csv
from cli.base import EXIT_BAD_INPUT, EXIT_NON_CONVERGENCE, EXIT_VERIFICATION_FAILED, FracpmeCommand
from cli.runconfig import load_run_config, output_directory
from solver.config import REFINEMENT_KNOBS
from solver.exceptions import NonConvergence
from solver.refinement import refinement_study


class Command(FracpmeCommand):
    help = 'Halve tau, eps or rho per level and report L2(0,T;L2) differences between consecutive runs.'

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='JSON run configuration.')
        parser.add_argument('--knob', required=True, choices=REFINEMENT_KNOBS)
        parser.add_argument('--levels', type=int, default=3, help='Number of levels (>= 2).')
        parser.add_argument('--out', help='Output directory (default: config output_dir, then FRACPME_OUTPUT_DIR).')

    def handle(self, *args, **options):
        knob = options['knob']
        try:
            config = load_run_config(options['config'])
            report = refinement_study(config.solver, *config.initial_fields(), knob, options['levels'])
        except NonConvergence as exc:
            self.fail(EXIT_NON_CONVERGENCE, f'Step {exc.step}: {exc}')
        except CaputoError as exc:
            self.fail(EXIT_BAD_INPUT, str(exc))

        out = output_directory(options.get('out'), config)
        try:
            path = write_refinement_csv(out / f'refine_{knob}.csv', report)
        except OSError as exc:
            self.fail(EXIT_BAD_INPUT, f'Cannot write {out}: {exc}')

        for lvl in report.levels:
            diffs = '' if lvl.diff_u is None else f'  diff_u={lvl.diff_u:.3e}  diff_p={lvl.diff_p:.3e}'
            self.stdout.write(f'level {lvl.level}: {knob}={lvl.value:.6g}{diffs}  psi={lvl.psi:.6g}')
        self.stdout.write(f'Wrote {path}')

        if not report.non_increasing:
            self.fail(EXIT_VERIFICATION_FAILED, 'Differences increased across the last two level pairs.')
        self.stdout.write(self.style.SUCCESS('Differences are non-increasing.'))
