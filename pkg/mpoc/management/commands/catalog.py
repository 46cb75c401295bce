from ..base import MpocCommand


class Command(MpocCommand):
    help = "List catalog entries, or register a problem document under a new name."
    subcommand = 'catalog'

    def add_command_arguments(self, parser):
        parser.add_argument('--register', metavar='NAME', help="store --file under this catalog name")
        parser.add_argument('--file', help="JSON problem document to register")
        parser.add_argument('--description', help="description stored with the entry")
