"""
Test cases for the run configuration form.
"""

from django.test import TestCase

from mpoc.forms import RunConfigForm
from mpoc.runner import RunConfig
from mpoc.tests.factories import RegisteredProblemFactory


class RunConfigFormTest(TestCase):
    """Test cases for RunConfigForm."""

    def form(self, **data):
        return RunConfigForm(data=data)

    def test_valid_classify(self):
        """Test a classify run with two points."""
        form = self.form(subcommand='classify', problem='saddle', x='0,0; -1,0', seed='7')
        self.assertTrue(form.is_valid(), form.errors)
        config = form.to_run_config()
        self.assertIsInstance(config, RunConfig)
        self.assertEqual(config.points, ((0.0, 0.0), (-1.0, 0.0)))
        self.assertEqual(config.seed, 7)
        self.assertIsNone(config.tolerances)

    def test_default_seed_from_settings(self):
        """Test an omitted seed falls back to MPOC_SEED."""
        form = self.form(subcommand='catalog')
        self.assertTrue(form.is_valid(), form.errors)
        self.assertEqual(form.to_run_config().seed, 42)

    def test_exactly_one_problem_source(self):
        """Test classify needs one of problem and file, not both or neither."""
        self.assertFalse(self.form(subcommand='classify').is_valid())
        self.assertFalse(self.form(subcommand='classify', problem='saddle', file='p.json').is_valid())

    def test_unknown_subcommand(self):
        """Test subcommands outside the known set are rejected."""
        form = self.form(subcommand='optimize', problem='saddle')
        self.assertFalse(form.is_valid())
        self.assertIn('subcommand', form.errors)

    def test_point_dimensions_must_agree(self):
        """Test point lists with mixed dimensions are rejected."""
        form = self.form(subcommand='classify', problem='saddle', x='0,0;1,2,3')
        self.assertFalse(form.is_valid())
        self.assertIn('x', form.errors)

    def test_non_numeric_point(self):
        """Test non-numeric coordinates are rejected."""
        self.assertFalse(self.form(subcommand='classify', problem='saddle', x='a,b').is_valid())

    def test_regularize_start_options(self):
        """Test regularize takes x0 or starts with a box."""
        self.assertTrue(self.form(subcommand='regularize', problem='saddle', x0='-0.9,0.05').is_valid())
        self.assertFalse(self.form(subcommand='regularize', problem='saddle').is_valid())
        self.assertFalse(
            self.form(subcommand='regularize', problem='saddle', x0='1,1', starts='3', box='-1,1,-1,1').is_valid()
        )
        form = self.form(subcommand='regularize', problem='saddle', starts='3')
        self.assertFalse(form.is_valid())
        self.assertIn('box', form.errors)
        form = self.form(subcommand='regularize', problem='saddle', starts='3', box='-2,2,-2,2')
        self.assertTrue(form.is_valid(), form.errors)
        self.assertEqual(form.to_run_config().box, (-2.0, 2.0, -2.0, 2.0))

    def test_box_bounds_ordered(self):
        """Test boxes with lo >= hi are rejected."""
        form = self.form(subcommand='regularize', problem='saddle', starts='3', box='2,-2,-2,2')
        self.assertFalse(form.is_valid())
        self.assertIn('box', form.errors)

    def test_schedule_overrides(self):
        """Test t0, shrink and t_min override the configured schedule."""
        form = self.form(subcommand='regularize', problem='saddle', x0='0,1', t0='0.5', shrink='0.2')
        self.assertTrue(form.is_valid(), form.errors)
        schedule = form.to_run_config().schedule
        self.assertEqual((schedule.t0, schedule.shrink, schedule.t_min), (0.5, 0.2, 1e-10))

    def test_invalid_schedule(self):
        """Test a shrink factor outside (0, 1) is a form error."""
        form = self.form(subcommand='regularize', problem='saddle', x0='0,1', shrink='1.5')
        self.assertFalse(form.is_valid())

    def test_tolerance_overrides(self):
        """Test tolerance options replace single thresholds."""
        form = self.form(subcommand='classify', problem='saddle', tol_activity='1e-6')
        self.assertTrue(form.is_valid(), form.errors)
        tol = form.to_run_config().tolerances
        self.assertEqual(tol.activity, 1e-6)
        self.assertEqual(tol.multiplier_zero, 1e-7)

    def test_negative_tolerance(self):
        """Test negative tolerances are rejected."""
        self.assertFalse(self.form(subcommand='classify', problem='saddle', tol_residual='-1').is_valid())

    def test_scno_requirements(self):
        """Test scno needs a file, a sparsity level and one point."""
        form = self.form(subcommand='scno')
        self.assertFalse(form.is_valid())
        for key in ('file', 's', 'x'):
            self.assertIn(key, form.errors)
        form = self.form(subcommand='scno', file='f.json', s='1', x='1,0;0,1')
        self.assertFalse(form.is_valid())
        self.assertIn('x', form.errors)
        form = self.form(subcommand='scno', file='f.json', s='0', x='0,0', y='1,1')
        self.assertTrue(form.is_valid(), form.errors)
        self.assertEqual(form.to_run_config().y, (1.0, 1.0))

    def test_landscape_requirements(self):
        """Test landscape needs a planar box and levels."""
        form = self.form(subcommand='landscape', problem='saddle', box='-3,3', levels='0:1:0.5')
        self.assertFalse(form.is_valid())
        self.assertIn('box', form.errors)
        form = self.form(subcommand='landscape', problem='saddle', box='-3,3,-3,3')
        self.assertFalse(form.is_valid())
        self.assertIn('levels', form.errors)
        form = self.form(subcommand='landscape', problem='saddle', box='-3,3,-3,3', levels='0:1:0.5', res='101')
        self.assertTrue(form.is_valid(), form.errors)
        config = form.to_run_config()
        self.assertEqual(config.levels, (0.0, 0.5, 1.0))
        self.assertEqual(config.resolution, 101)

    def test_bad_levels(self):
        """Test malformed level ranges are form errors."""
        form = self.form(subcommand='landscape', problem='saddle', box='-3,3,-3,3', levels='1:0:0.5')
        self.assertFalse(form.is_valid())
        self.assertIn('levels', form.errors)

    def test_register_needs_file(self):
        """Test catalog registration needs a document."""
        form = self.form(subcommand='catalog', register='mine')
        self.assertFalse(form.is_valid())
        self.assertIn('file', form.errors)

    def test_duplicate_registration(self):
        """Test a name already in the table is rejected."""
        RegisteredProblemFactory(name='taken')
        form = self.form(subcommand='catalog', register='taken', file='p.json')
        self.assertFalse(form.is_valid())
        self.assertIn('register', form.errors)

    def test_suite_numbers(self):
        """Test suites are parsed and limited to 1..8."""
        form = self.form(subcommand='selftest', suites='1,2,7')
        self.assertTrue(form.is_valid(), form.errors)
        self.assertEqual(form.to_run_config().suites, (1, 2, 7))
        self.assertFalse(self.form(subcommand='selftest', suites='9').is_valid())
        self.assertFalse(self.form(subcommand='selftest', suites='one').is_valid())
