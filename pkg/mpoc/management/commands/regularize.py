from ..base import MpocCommand


class Command(MpocCommand):
    help = "Solve by Scholtes-type regularization from one start or from seeded random starts."
    subcommand = 'regularize'
    needs_problem = True

    def add_command_arguments(self, parser):
        parser.add_argument('--x0', help="single start point 'a,b,...'")
        parser.add_argument('--starts', type=int, help="number of random starts drawn from --box")
        parser.add_argument('--box', help="lo1,hi1,lo2,hi2,... for random starts")
        parser.add_argument('--workers', type=int, default=1, help="threads for multi-start runs")
        parser.add_argument('--min-converged', type=int,
                            help="runs that must converge for a positive verdict (default: all)")
        parser.add_argument('--trace', action='store_true', help="emit one record per regularization stage")

        schedule = parser.add_argument_group('schedule')
        schedule.add_argument('--t0', type=float)
        schedule.add_argument('--shrink', type=float)
        schedule.add_argument('--t-min', '--tmin', dest='t_min', type=float)
