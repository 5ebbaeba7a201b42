"""
Management command to run the solver on a JSON configuration
"""
from caputo.exceptions import CaputoError
from cli.artifacts import write_json, write_snapshots
from cli.base import EXIT_BAD_INPUT, EXIT_NON_CONVERGENCE, EXIT_VERIFICATION_FAILED, FracpmeCommand
from cli.rng import resolve_seed
from cli.runconfig import load_run_config, output_directory
from solver.exceptions import NonConvergence
from solver.ledger import diagnostics
from solver.stepping import run


class Command(FracpmeCommand):
    help = 'Run the fractional porous-medium solver; writes ledger.csv, diagnostics.json and FLD1 snapshots.'

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='JSON run configuration.')
        parser.add_argument('--out', help='Output directory (default: config output_dir, then FRACPME_OUTPUT_DIR).')
        parser.add_argument('--seed', type=int, help='Seed recorded with the run (default: config, then FRACPME_SEED).')

    def handle(self, *args, **options):
        try:
            config = load_run_config(options['config'])
            seed = resolve_seed(options['seed']) if options.get('seed') is not None else config.seed
        except CaputoError as exc:
            self.fail(EXIT_BAD_INPUT, str(exc))

        out = output_directory(options.get('out'), config)
        solver = config.solver
        self.stdout.write(
            f'Solving d={solver.grid.dim} M={solver.grid.points} alpha={solver.alpha.alpha} s={solver.s} '
            f'tau={solver.tau:g} N={solver.n_steps}...'
        )
        try:
            history, ledger = run(solver, *config.initial_fields())
        except NonConvergence as exc:
            self.fail(EXIT_NON_CONVERGENCE, f'Step {exc.step}: {exc}')
        except CaputoError as exc:
            self.fail(EXIT_BAD_INPUT, str(exc))

        report = diagnostics(history, ledger, solver)
        report['seed'] = seed
        report['steps'] = [r.as_dict() for r in history.reports]
        try:
            ledger.to_csv(out / 'ledger.csv')
            write_json(out / 'diagnostics.json', report)
            snapshots = write_snapshots(out, history, config.snapshot_every)
        except OSError as exc:
            self.fail(EXIT_BAD_INPUT, f'Cannot write results to {out}: {exc}')

        self.stdout.write(f'Wrote ledger.csv, diagnostics.json and {len(snapshots)} snapshots to {out}')
        for name, passed in report['verdicts'].items():
            style = self.style.SUCCESS if passed else self.style.ERROR
            self.stdout.write(style(f'  {name}: {"pass" if passed else "FAIL"}'))

        failed = [name for name, passed in report['verdicts'].items() if not passed and name != 'certified']
        if failed:
            self.fail(EXIT_VERIFICATION_FAILED, f'Diagnostics failed: {", ".join(failed)}')
        if not report['verdicts']['certified']:
            self.stdout.write(self.style.WARNING('Negative values were clipped; this run is not certified.'))
        self.stdout.write(self.style.SUCCESS('All diagnostics passed.'))
