"""
Test cases for the toolkit models.

Covers document validation on RegisteredProblem and the verdict helpers
on RunRecord.
"""

from django.contrib import admin
from django.core.exceptions import ValidationError
from django.db import IntegrityError
from django.test import TestCase

from mpoc.models import RegisteredProblem, RunRecord
from mpoc.tests.factories import RegisteredProblemFactory, RunRecordFactory, shifted_norm_document


class RegisteredProblemModelTest(TestCase):
    """Test cases for the RegisteredProblem model."""

    def test_create_problem(self):
        """Test creating a problem with a valid document."""
        record = RegisteredProblemFactory(name='planar')
        self.assertEqual(str(record), 'planar')
        self.assertEqual(record.build().n, 2)
        self.assertIsNotNone(record.created_at)

    def test_full_clean_accepts_valid_document(self):
        """Test a valid document passes model validation."""
        record = RegisteredProblem(name='valid', document=shifted_norm_document())
        record.full_clean()

    def test_invalid_document_rejected(self):
        """Test parse errors become a validation error on the document field."""
        record = RegisteredProblem(name='broken', document={'n': 2})
        with self.assertRaises(ValidationError) as ctx:
            record.full_clean()
        self.assertIn('document', ctx.exception.message_dict)

    def test_bad_documented_points_rejected(self):
        """Test documented points must match the dimension."""
        document = shifted_norm_document()
        document['stationary_points'] = [[1.0, 2.0, 3.0]]
        with self.assertRaises(ValidationError):
            RegisteredProblem(name='bad-points', document=document).full_clean()

    def test_builtin_name_rejected(self):
        """Test built-in catalog names cannot be registered."""
        with self.assertRaises(ValidationError) as ctx:
            RegisteredProblem(name='saddle', document=shifted_norm_document()).full_clean()
        self.assertIn('name', ctx.exception.message_dict)

    def test_unique_name_constraint(self):
        """Test that names must be unique."""
        RegisteredProblem.objects.create(name='twice', document=shifted_norm_document())
        with self.assertRaises(IntegrityError):
            RegisteredProblem.objects.create(name='twice', document=shifted_norm_document())

    def test_catalog_entry_description_fallback(self):
        """Test the document description is used when the record has none."""
        document = shifted_norm_document()
        document['description'] = 'from the document'
        record = RegisteredProblem.objects.create(name='described', document=document)
        self.assertEqual(record.as_catalog_entry().description, 'from the document')

    def test_absolute_url(self):
        """Test the absolute URL points at the catalog API."""
        record = RegisteredProblemFactory(name='linked')
        self.assertEqual(record.get_absolute_url(), '/api/catalog/linked/')

    def test_ordering(self):
        """Test problems are ordered by name."""
        RegisteredProblemFactory(name='beta')
        RegisteredProblemFactory(name='alpha')
        self.assertEqual(list(RegisteredProblem.objects.values_list('name', flat=True)), ['alpha', 'beta'])


class RunRecordModelTest(TestCase):
    """Test cases for the RunRecord model."""

    def test_verdict_for_status(self):
        """Test exit statuses map to verdicts."""
        self.assertEqual(RunRecord.verdict_for(0), RunRecord.Verdict.POSITIVE)
        self.assertEqual(RunRecord.verdict_for(2), RunRecord.Verdict.NEGATIVE)
        self.assertEqual(RunRecord.verdict_for(1), RunRecord.Verdict.ERROR)

    def test_summary_is_last_record(self):
        """Test summary returns the final record."""
        run = RunRecordFactory(records=[{'record': 'a'}, {'record': 'b'}])
        self.assertEqual(run.record_count(), 2)
        self.assertEqual(run.summary(), {'record': 'b'})

    def test_empty_run(self):
        """Test a run without records has no summary."""
        run = RunRecordFactory(records=[])
        self.assertIsNone(run.summary())
        self.assertEqual(run.record_count(), 0)

    def test_string_representation(self):
        """Test the string representation of a run."""
        run = RunRecordFactory(subcommand='selftest', problem='', verdict=RunRecord.Verdict.NEGATIVE)
        self.assertEqual(str(run), 'selftest - (negative)')

    def test_latest_first(self):
        """Test runs are ordered newest first."""
        self.assertEqual(RunRecord._meta.ordering, ['-created_at'])


class AdminDisplayTest(TestCase):
    """Test cases for admin list columns."""

    def test_problem_columns(self):
        """Test n and k are read from the document."""
        model_admin = admin.site._registry[RegisteredProblem]
        record = RegisteredProblemFactory(name='columns')
        self.assertEqual(model_admin.dimension(record), 2)
        self.assertEqual(model_admin.pair_count(record), 1)

    def test_verdict_badge(self):
        """Test verdicts are coloured and runs cannot be added by hand."""
        model_admin = admin.site._registry[RunRecord]
        self.assertIn('green', model_admin.verdict_badge(RunRecordFactory()))
        self.assertIn('red', model_admin.verdict_badge(RunRecordFactory(verdict=RunRecord.Verdict.ERROR)))
        self.assertFalse(model_admin.has_add_permission(None))
