"""
Shared plumbing for the toolkit's management commands.

Every command validates its options with ``RunConfigForm``, hands the
resulting ``RunConfig`` to ``mpoc.runner.run`` and maps the exit status to
``CommandError``: status 1 for errors, status 2 for a negative verdict.
"""

from django.core.management.base import BaseCommand, CommandError

from ..forms import RunConfigForm
from ..runner import ERROR, NEGATIVE, run


class MpocCommand(BaseCommand):
    subcommand = ''
    needs_problem = False

    def add_arguments(self, parser):
        if self.needs_problem:
            source = parser.add_argument_group('problem source')
            source.add_argument('--problem', help="catalog name, e.g. saddle or 'instability_perturbed(0.1)'")
            source.add_argument('--file', help="JSON problem document")
        self.add_command_arguments(parser)

        parser.add_argument('--seed', type=int, help="seed for randomized parts (MPOC_SEED overrides)")
        parser.add_argument('--output', help="write records to this file instead of stdout")
        parser.add_argument('--save', action='store_true', help="store the run as a RunRecord")

        tolerances = parser.add_argument_group('tolerances')
        tolerances.add_argument('--tol-activity', type=float)
        tolerances.add_argument('--tol-residual', type=float)
        tolerances.add_argument('--tol-eigen', type=float)
        tolerances.add_argument('--tol-multiplier', type=float)
        tolerances.add_argument('--tol-feasibility', type=float)

    def add_command_arguments(self, parser):
        pass

    def form_data(self, options) -> dict:
        data = {'subcommand': self.subcommand}
        for key, value in options.items():
            if value is None or value is False:
                continue
            data[key] = value
        return data

    def handle(self, *args, **options):
        form = RunConfigForm(data=self.form_data(options))
        if not form.is_valid():
            raise CommandError(self._form_errors(form), returncode=ERROR)

        outcome = run(form.to_run_config(), self.stdout)
        if outcome.status == ERROR:
            raise CommandError(outcome.message, returncode=ERROR)
        if outcome.status == NEGATIVE:
            raise CommandError(f"{self.subcommand}: verdict negative", returncode=NEGATIVE)

    @staticmethod
    def _form_errors(form) -> str:
        lines = []
        for field, errors in form.errors.items():
            label = 'options' if field == '__all__' else f"--{field.replace('_', '-')}"
            lines += [f"{label}: {error}" for error in errors]
        return '; '.join(lines)
