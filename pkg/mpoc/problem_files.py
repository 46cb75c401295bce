"""
JSON problem documents.

A document describes an MPOC instance with a quadratic objective and
linear / coordinate constraints:

    {
      "name": "optional label",
      "n": 2,
      "quadratic_f": {"Q": [[2, 0], [0, 2]], "c": [2, -2], "r": 2},
      "linear_h": {"A": [[...]], "b": [...]},      h(x) = A x - b = 0
      "linear_g": {"A": [[...]], "b": [...]},      g(x) = A x - b >= 0
      "coordinate_F1": [0],                        F1_m(x) = x[idx_m]
      "coordinate_F2": [1],                        F2_m(x) = x[idx_m]
      "stationary_points": [[-1, 0], [0, 1]]       optional, documented points
    }

Coordinate indices are 0-based. Every section except ``n`` and
``quadratic_f`` is optional. Parse errors carry the line and column of the
offending JSON token; schema errors carry the JSON path of the bad value.
"""

import json
from pathlib import Path
from typing import Any, List, Optional, Tuple

import numpy as np

from .exceptions import ProblemFileError, RejectedInput
from .problems import MpocProblem, affine_map, coordinate_map, quadratic_function

KNOWN_KEYS = {
    'name', 'description', 'n', 'quadratic_f', 'linear_h', 'linear_g',
    'coordinate_F1', 'coordinate_F2', 'stationary_points',
}


class _Reader:
    """Typed access into a decoded document with JSON-path error messages."""

    def __init__(self, source: str):
        self.source = source

    def fail(self, path: str, message: str):
        raise ProblemFileError(message, path=path, source=self.source)

    def integer(self, value: Any, path: str, minimum: int = 0) -> int:
        if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
            self.fail(path, f"expected an integer >= {minimum}, got {value!r}")
        return value

    def number(self, value: Any, path: str) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not np.isfinite(value):
            self.fail(path, f"expected a finite number, got {value!r}")
        return float(value)

    def vector(self, value: Any, path: str, length: Optional[int] = None) -> np.ndarray:
        if not isinstance(value, list):
            self.fail(path, f"expected a list of numbers, got {type(value).__name__}")
        if length is not None and len(value) != length:
            self.fail(path, f"expected {length} entries, got {len(value)}")
        return np.array([self.number(v, f"{path}[{i}]") for i, v in enumerate(value)])

    def matrix(self, value: Any, path: str, columns: int) -> np.ndarray:
        if not isinstance(value, list):
            self.fail(path, "expected a list of rows")
        rows = [self.vector(row, f"{path}[{i}]", columns) for i, row in enumerate(value)]
        return np.array(rows).reshape(len(rows), columns)

    def section(self, document: dict, key: str) -> dict:
        value = document[key]
        if not isinstance(value, dict):
            self.fail(f"$.{key}", "expected an object")
        return value


def _linear_block(reader: _Reader, document: dict, key: str, n: int) -> Tuple[np.ndarray, np.ndarray]:
    section = reader.section(document, key)
    A = reader.matrix(section.get('A', []), f"$.{key}.A", n)
    b = section.get('b')
    b = np.zeros(A.shape[0]) if b is None else reader.vector(b, f"$.{key}.b", A.shape[0])
    return A, b


def _indices(reader: _Reader, document: dict, key: str, n: int) -> List[int]:
    value = document.get(key, [])
    if not isinstance(value, list):
        reader.fail(f"$.{key}", "expected a list of coordinate indices")
    indices = [reader.integer(v, f"$.{key}[{i}]") for i, v in enumerate(value)]
    for i, index in enumerate(indices):
        if index >= n:
            reader.fail(f"$.{key}[{i}]", f"index {index} out of range for n={n}")
    return indices


def problem_from_document(document: Any, source: str = '<document>') -> MpocProblem:
    """Build an ``MpocProblem`` from a decoded problem document."""
    reader = _Reader(source)
    if not isinstance(document, dict):
        reader.fail('$', "top level must be an object")
    unknown = sorted(set(document) - KNOWN_KEYS)
    if unknown:
        reader.fail('$', f"unknown keys: {', '.join(unknown)}")
    if 'n' not in document:
        reader.fail('$.n', "missing dimension")
    n = reader.integer(document['n'], '$.n', minimum=1)
    if 'quadratic_f' not in document:
        reader.fail('$.quadratic_f', "missing objective")

    objective = reader.section(document, 'quadratic_f')
    Q = reader.matrix(objective.get('Q', [[0.0] * n for _ in range(n)]), '$.quadratic_f.Q', n)
    if Q.shape[0] != n:
        reader.fail('$.quadratic_f.Q', f"expected {n} rows, got {Q.shape[0]}")
    c = reader.vector(objective.get('c', [0.0] * n), '$.quadratic_f.c', n)
    r = reader.number(objective.get('r', 0.0), '$.quadratic_f.r')

    h = g = None
    if 'linear_h' in document:
        A, b = _linear_block(reader, document, 'linear_h', n)
        h = affine_map(A, -b, n=n, label='linear h')
    if 'linear_g' in document:
        A, b = _linear_block(reader, document, 'linear_g', n)
        g = affine_map(A, -b, n=n, label='linear g')

    first = _indices(reader, document, 'coordinate_F1', n)
    second = _indices(reader, document, 'coordinate_F2', n)
    if len(first) != len(second):
        reader.fail(
            '$.coordinate_F2',
            f"coordinate_F1 and coordinate_F2 differ in length ({len(first)} != {len(second)})",
        )

    try:
        return MpocProblem.build(
            n,
            quadratic_function(Q, c, r),
            h=h,
            g=g,
            F1=coordinate_map(n, first, label='F1'),
            F2=coordinate_map(n, second, label='F2'),
            name=str(document.get('name', '')),
        )
    except RejectedInput as exc:
        reader.fail('$', str(exc))


def documented_points(document: dict, source: str = '<document>') -> List[Tuple[float, ...]]:
    reader = _Reader(source)
    n = document.get('n', 0)
    points = document.get('stationary_points', [])
    if not isinstance(points, list):
        reader.fail('$.stationary_points', "expected a list of points")
    return [tuple(reader.vector(p, f"$.stationary_points[{i}]", n)) for i, p in enumerate(points)]


def decode_document(text: str, source: str = '<string>') -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(exc.msg, line=exc.lineno, column=exc.colno, source=source) from exc


def parse_problem(text: str, source: str = '<string>') -> MpocProblem:
    return problem_from_document(decode_document(text, source), source)


def load_document(path) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as exc:
        raise ProblemFileError(f"cannot read file: {exc.strerror}", source=str(path)) from exc
    return decode_document(text, str(path))


def load_problem(path) -> MpocProblem:
    path = Path(path)
    return problem_from_document(load_document(path), str(path))
