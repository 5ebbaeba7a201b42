"""
Management command to tabulate the Caputo weights λ_1..λ_n
"""
from pathlib import Path

from caputo.exceptions import CaputoError
from caputo.weights import build_weights
from cli.artifacts import write_weights_csv
from cli.base import EXIT_BAD_INPUT, FracpmeCommand
from cli.runconfig import output_directory


class Command(FracpmeCommand):
    help = 'Write the weights λ_1..λ_n of the discrete Caputo derivative as CSV (k,lambda_k).'

    def add_arguments(self, parser):
        parser.add_argument('--alpha', type=float, required=True, help='Fractional order in (0, 1].')
        parser.add_argument('--n', type=int, required=True, help='Number of weights.')
        parser.add_argument(
            '--out',
            help='CSV file, or a directory to receive weights.csv (default FRACPME_OUTPUT_DIR).',
        )

    def handle(self, *args, **options):
        try:
            weights = build_weights(options['alpha'], options['n'])
        except CaputoError as exc:
            self.fail(EXIT_BAD_INPUT, str(exc))

        target = Path(options['out']) if options.get('out') else output_directory(None)
        if target.suffix.lower() != '.csv':
            target = target / 'weights.csv'
        try:
            path = write_weights_csv(target, weights)
        except OSError as exc:
            self.fail(EXIT_BAD_INPUT, f'Cannot write {target}: {exc}')

        self.stdout.write(self.style.SUCCESS(f'Wrote {weights.n} weights for alpha={weights.alpha} to {path}'))
