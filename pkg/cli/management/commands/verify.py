"""
Management command to run the verification suites and print a JSON summary
"""
import json
from pathlib import Path

from caputo.exceptions import CaputoError
from cli.artifacts import write_json
from cli.base import EXIT_BAD_INPUT, EXIT_VERIFICATION_FAILED, FracpmeCommand
from cli.suites import SUITES, parse_perturbation, run_suites


class Command(FracpmeCommand):
    help = 'Run verification suites; exit 0 only if every check passes.'

    def add_arguments(self, parser):
        parser.add_argument('suite', choices=SUITES + ('all',))
        parser.add_argument('--seed', type=int, help='PCG64 seed (default FRACPME_SEED).')
        parser.add_argument('--out', help='Also write the JSON summary to this file.')
        parser.add_argument(
            '--perturb-lambda',
            dest='perturb_lambda',
            metavar='K:DELTA',
            help='Add DELTA to λ_K before the weight checks (mutation test; must make them fail).',
        )

    def handle(self, *args, **options):
        try:
            perturb = parse_perturbation(options.get('perturb_lambda'))
            summary = run_suites(options['suite'], seed=options.get('seed'), perturb=perturb)
        except CaputoError as exc:
            self.fail(EXIT_BAD_INPUT, str(exc))

        self.stdout.write(json.dumps(summary, indent=2, sort_keys=True))
        if options.get('out'):
            try:
                write_json(Path(options['out']), summary)
            except OSError as exc:
                self.fail(EXIT_BAD_INPUT, f'Cannot write {options["out"]}: {exc}')

        if not summary['passed']:
            self.fail(EXIT_VERIFICATION_FAILED, f'Verification failed: {summary["first_failure"]}')
        self.stderr.write(self.style.SUCCESS(f'{len(summary["checks"])} checks passed.'))
