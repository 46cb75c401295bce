from ..base import MpocCommand


class Command(MpocCommand):
    help = "Certify T-stationarity of points and classify them (ND1-ND4, QI, BI, TI)."
    subcommand = 'classify'
    needs_problem = True

    def add_command_arguments(self, parser):
        parser.add_argument('--x', help="point(s) as 'a,b' or 'a,b;c,d'; defaults to the documented points")
        parser.add_argument('--witness', action='store_true',
                            help="search a small feasible grid around each point for a lower objective value")
