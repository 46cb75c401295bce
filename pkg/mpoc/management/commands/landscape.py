from ..base import MpocCommand


class Command(MpocCommand):
    help = "Count connected components of lower level sets of a planar problem over a level sweep."
    subcommand = 'landscape'
    needs_problem = True

    def add_command_arguments(self, parser):
        parser.add_argument('--box', help="x1_lo,x1_hi,x2_lo,x2_hi")
        parser.add_argument('--res', type=int, default=801, help="grid points per axis")
        parser.add_argument('--levels', help="lo:hi:step")
        parser.add_argument('--csv', help="write level,betti0 rows to this file")
        parser.add_argument('--svg', help="write a step plot to this file")
