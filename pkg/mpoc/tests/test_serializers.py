"""
Test cases for JSON encoding of results.
"""

import io
import json

import numpy as np
from django.test import SimpleTestCase

from mpoc.catalog import catalog
from mpoc.nondegeneracy import Classification
from mpoc.serializers import JsonLinesWriter, dumps, to_jsonable
from mpoc.stationarity import t_stationarity_check


class ToJsonableTest(SimpleTestCase):
    """Test cases for to_jsonable."""

    def test_numpy_values(self):
        """Test arrays and numpy scalars become plain Python values."""
        value = to_jsonable({'a': np.array([1.0, 2.5]), 'b': np.int64(3), 'c': np.bool_(True)})
        self.assertEqual(value, {'a': [1.0, 2.5], 'b': 3, 'c': True})
        self.assertIsInstance(value['b'], int)

    def test_non_finite_floats(self):
        """Test infinities and NaN become strings."""
        self.assertEqual(to_jsonable([float('inf'), -np.inf, float('nan')]), ['inf', '-inf', 'nan'])

    def test_enums_and_sets(self):
        """Test enums use their value and sets are sorted."""
        self.assertEqual(to_jsonable(Classification.DEGENERATE), 'DEGENERATE')
        self.assertEqual(to_jsonable({3, 1, 2}), [1, 2, 3])

    def test_dataclass_field_metadata(self):
        """Test renamed fields are renamed and hidden fields are dropped."""
        certificate = t_stationarity_check(catalog('saddle').problem, (0.0, 0.0))
        multipliers = to_jsonable(certificate.multipliers)
        self.assertIn('lambda', multipliers)
        self.assertNotIn('lam', multipliers)
        self.assertNotIn('pattern', multipliers)
        self.assertAlmostEqual(multipliers['rho1'][0], 2.0)

    def test_dumps_is_strict_json(self):
        """Test dumps output parses back without NaN literals."""
        text = dumps({'value': float('nan'), 'x': (1, 2)})
        self.assertEqual(json.loads(text), {'value': 'nan', 'x': [1, 2]})


class JsonLinesWriterTest(SimpleTestCase):
    """Test cases for JsonLinesWriter."""

    def test_one_record_per_line(self):
        """Test each write adds one tagged line and keeps the record."""
        stream = io.StringIO()
        writer = JsonLinesWriter(stream)
        writer.write('level', level=0.5, betti0=0)
        writer.write('level', level=1.5, betti0=2)
        lines = stream.getvalue().splitlines()
        self.assertEqual(len(lines), 2)
        self.assertEqual(json.loads(lines[1]), {'record': 'level', 'level': 1.5, 'betti0': 2})
        self.assertEqual([r['betti0'] for r in writer.records], [0, 2])
