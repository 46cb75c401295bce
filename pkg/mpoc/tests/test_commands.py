"""
Test cases for the toolkit management commands.

Commands write one JSON record per line to stdout and signal a negative
verdict or an error through CommandError.returncode.
"""

import json
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase

from mpoc.models import RegisteredProblem, RunRecord
from mpoc.tests.factories import shifted_norm_document

SCNO_DOCUMENT = {
    'name': 'shifted',
    'n': 2,
    'quadratic_f': {'Q': [[2, 0], [0, 2]], 'c': [-2, -4], 'r': 5},
}


def records(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


class CommandTestCase(TestCase):
    def setUp(self):
        """Set up test data."""
        self.directory = tempfile.TemporaryDirectory()
        self.addCleanup(self.directory.cleanup)

    def path(self, name):
        return str(Path(self.directory.name) / name)

    def write_document(self, name, document):
        path = self.path(name)
        Path(path).write_text(json.dumps(document), encoding='utf-8')
        return path

    def call(self, *args, **options):
        out = StringIO()
        call_command(*args, stdout=out, **options)
        return records(out.getvalue())


class ClassifyCommandTest(CommandTestCase):
    """Test cases for manage.py classify."""

    def test_documented_points(self):
        """Test every documented saddle point is certified and classified."""
        output = self.call('classify', problem='saddle')
        self.assertEqual(len(output), 3)
        by_point = {tuple(r['x']): r for r in output}
        self.assertEqual(by_point[(0.0, 0.0)]['classification'], 'NONDEGENERATE_SADDLE')
        self.assertEqual(by_point[(0.0, 0.0)]['TI'], 1)
        self.assertEqual(by_point[(-1.0, 0.0)]['classification'], 'NONDEGENERATE_LOCAL_MIN')
        self.assertTrue(all(r['record'] == 'classification' for r in output))

    def test_negative_verdict(self):
        """Test a feasible non-stationary point exits with status 2."""
        out = StringIO()
        with self.assertRaises(CommandError) as ctx:
            call_command('classify', problem='saddle', x='0.5,0', stdout=out)
        self.assertEqual(ctx.exception.returncode, 2)
        record = records(out.getvalue())[0]
        self.assertFalse(record['is_t_stationary'])
        self.assertIn('GRAD_RESIDUAL', record['violated_conditions'])

    def test_infeasible_point(self):
        """Test an infeasible point is reported with its worst violation."""
        out = StringIO()
        with self.assertRaises(CommandError) as ctx:
            call_command('classify', problem='saddle', x='1,1', stdout=out)
        self.assertEqual(ctx.exception.returncode, 2)
        record = records(out.getvalue())[0]
        self.assertFalse(record['feasible'])
        self.assertEqual(record['worst'], 'F1*F2[0]')

    def test_unknown_problem(self):
        """Test a catalog miss exits with status 1 and an error record."""
        out = StringIO()
        with self.assertRaises(CommandError) as ctx:
            call_command('classify', problem='no-such-problem', stdout=out)
        self.assertEqual(ctx.exception.returncode, 1)
        self.assertEqual(records(out.getvalue())[-1]['error'], 'UnknownProblem')

    def test_missing_problem_source(self):
        """Test invalid options exit with status 1."""
        with self.assertRaises(CommandError) as ctx:
            call_command('classify', stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 1)

    def test_problem_file(self):
        """Test problems can be read from a document."""
        path = self.write_document('saddle.json', shifted_norm_document())
        output = self.call('classify', file=path, x='0,1')
        self.assertEqual(output[0]['classification'], 'NONDEGENERATE_LOCAL_MIN')

    def test_witness(self):
        """Test the local witness is attached on request."""
        output = self.call('classify', problem='saddle', x='0,0', witness=True)
        self.assertTrue(output[0]['local_witness']['found'])

    def test_save_run(self):
        """Test --save stores the run and its records."""
        self.call('classify', problem='saddle', save=True)
        run = RunRecord.objects.get()
        self.assertEqual(run.subcommand, 'classify')
        self.assertEqual(run.problem, 'saddle')
        self.assertEqual(run.verdict, RunRecord.Verdict.POSITIVE)
        self.assertEqual(run.record_count(), 3)

    def test_output_file(self):
        """Test --output writes records to a file instead of stdout."""
        path = self.path('records.jsonl')
        out = StringIO()
        call_command('classify', problem='saddle', output=path, stdout=out)
        self.assertEqual(out.getvalue(), '')
        self.assertEqual(len(records(Path(path).read_text(encoding='utf-8'))), 3)

    def test_unwritable_output(self):
        """Test an output path that cannot be opened is an error record with status 1."""
        out = StringIO()
        with self.assertRaises(CommandError) as ctx:
            call_command(
                'classify', problem='saddle', output=self.path('missing/records.jsonl'), stdout=out
            )
        self.assertEqual(ctx.exception.returncode, 1)
        record = records(out.getvalue())[-1]
        self.assertEqual(record['record'], 'error')
        self.assertEqual(record['error'], 'FileNotFoundError')


class RegularizeCommandTest(CommandTestCase):
    """Test cases for manage.py regularize."""

    def test_single_start(self):
        """Test one start reaches the minimizer on x2 = 0."""
        output = self.call('regularize', problem='saddle', x0='-0.9,0.05', t0=0.01)
        run, summary = output
        self.assertEqual(run['record'], 'regularization')
        self.assertTrue(run['converged'])
        self.assertAlmostEqual(run['limit_point'][0], -1.0, places=5)
        self.assertAlmostEqual(run['limit_point'][1], 0.0, places=5)
        self.assertEqual(summary['record'], 'regularization_summary')
        self.assertEqual((summary['runs'], summary['converged']), (1, 1))

    def test_trace(self):
        """Test --trace emits one record per stage before the run record."""
        output = self.call('regularize', problem='instability', x0='0.3,0.3', trace=True, t0=0.1, t_min=1e-3)
        stages = [r for r in output if r['record'] == 'stage']
        self.assertGreaterEqual(len(stages), 2)
        self.assertIn('lambda', stages[0]['iterate'])

    def test_tmin_alias(self):
        """Test --tmin and --t-min set the same schedule floor."""
        for flag in ('--tmin', '--t-min'):
            output = self.call(
                'regularize', '--problem', 'instability', '--x0', '0.3,0.3',
                '--t0', '0.1', flag, '1e-3',
            )
            run = output[0]
            self.assertEqual(run['record'], 'regularization')
            self.assertLessEqual(run['stages'], 4)
            self.assertGreater(run['final_t'], 1e-5)

    def test_box_dimension(self):
        """Test a box that does not match n is an error."""
        with self.assertRaises(CommandError) as ctx:
            call_command('regularize', problem='saddle', starts=2, box='-1,1', stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 1)


class ScnoCommandTest(CommandTestCase):
    """Test cases for manage.py scno."""

    def test_completed_support_point(self):
        """Test x = (1, 0) is completed, certified and audited."""
        path = self.write_document('scno.json', SCNO_DOCUMENT)
        record = self.call('scno', file=path, s=1, x='1,0')[0]
        self.assertEqual(record['y'], [0.0, 1.0])
        self.assertTrue(record['y_completed'])
        self.assertTrue(record['t_stationary'])
        self.assertTrue(record['m_stationarity']['is_m_stationary'])
        self.assertEqual(record['degeneracy_audit']['case_tag'], 'CASE1')

    def test_not_m_stationary(self):
        """Test a point with a nonzero partial on its support exits with status 2."""
        path = self.write_document('scno.json', SCNO_DOCUMENT)
        with self.assertRaises(CommandError) as ctx:
            call_command('scno', file=path, s=1, x='0.5,0', stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 2)


class LandscapeCommandTest(CommandTestCase):
    """Test cases for manage.py landscape."""

    def test_sweep_with_files(self):
        """Test level records, the summary and the CSV and SVG files."""
        csv_path, svg_path = self.path('levels.csv'), self.path('levels.svg')
        output = self.call(
            'landscape', problem='saddle', box='-3,3,-3,3', res=101,
            levels='0.5:2.5:1', csv=csv_path, svg=svg_path,
        )
        levels = [r for r in output if r['record'] == 'level']
        self.assertEqual([r['betti0'] for r in levels], [0, 2, 1])
        summary = output[-1]
        self.assertEqual(summary['record'], 'landscape')
        self.assertEqual(summary['merges'], 1)
        self.assertIn('compactness', summary['compactness_note'])
        self.assertTrue(Path(csv_path).read_text(encoding='utf-8').startswith('level,betti0'))
        self.assertIn('<polyline', Path(svg_path).read_text(encoding='utf-8'))


class CatalogCommandTest(CommandTestCase):
    """Test cases for manage.py catalog."""

    def test_listing(self):
        """Test the listing includes built-ins and the parametric family."""
        names = [r['name'] for r in self.call('catalog')]
        self.assertIn('saddle', names)
        self.assertIn('instability_perturbed(<epsilon>)', names)

    def test_register(self):
        """Test a document is stored and then listed."""
        path = self.write_document('mine.json', shifted_norm_document(name='mine'))
        output = self.call('catalog', register='mine', file=path, description='test entry')
        self.assertEqual(output[0]['record'], 'registered')
        self.assertEqual(RegisteredProblem.objects.get(name='mine').description, 'test entry')
        self.assertIn('mine', [r['name'] for r in self.call('catalog')])

    def test_register_invalid_document(self):
        """Test an invalid document is not stored."""
        path = self.write_document('bad.json', {'n': 2})
        with self.assertRaises(CommandError) as ctx:
            call_command('catalog', register='bad', file=path, stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 1)
        self.assertFalse(RegisteredProblem.objects.filter(name='bad').exists())


class SelftestCommandTest(CommandTestCase):
    """Test cases for manage.py selftest."""

    def test_selected_suites(self):
        """Test chosen suites run and pass."""
        output = self.call('selftest', suites='1,2')
        suites = [r for r in output if r['record'] == 'suite']
        self.assertEqual([s['number'] for s in suites], [1, 2])
        self.assertTrue(output[-1]['passed'])
