from django.core.management.base import BaseCommand

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_NON_CONVERGENCE = 2
EXIT_BAD_INPUT = 3


class FracpmeCommand(BaseCommand):
    """Base for the numerical commands: argument errors exit with status 3, not argparse's 2."""

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser_exit = parser.exit

        def exit(status=0, message=None):
            parser_exit(EXIT_BAD_INPUT if status == 2 else status, message)

        parser.exit = exit
        return parser

    def fail(self, code: int, message: str):
        self.stderr.write(self.style.ERROR(message))
        raise SystemExit(code)
