from ..base import MpocCommand


class Command(MpocCommand):
    help = "Run the acceptance suites (all by default)."
    subcommand = 'selftest'

    def add_command_arguments(self, parser):
        parser.add_argument('--suites', help="comma-separated suite numbers, e.g. 1,2,6")
