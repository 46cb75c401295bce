from ..base import MpocCommand


class Command(MpocCommand):
    help = "Check M-, S- and T-stationarity of a sparsity-constrained point and audit its degeneracy."
    subcommand = 'scno'

    def add_command_arguments(self, parser):
        parser.add_argument('--f', dest='file', help="JSON problem document with the quadratic objective")
        parser.add_argument('--s', type=int, help="sparsity level, 0 <= s <= n-1")
        parser.add_argument('--x', help="point 'a,b,...'")
        parser.add_argument('--y', help="relaxation variables 'a,b,...'; defaults to the canonical completion")
