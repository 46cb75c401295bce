"""
JSON encoding of toolkit results.

Result dataclasses are converted field by field. A field may carry
``metadata={'json': 'other_name'}`` to rename it or ``{'json': None}`` to
leave it out. Floats are rounded through 17 significant digits so the same
run always prints the same bytes; non-finite floats become the strings
``"inf"``, ``"-inf"`` and ``"nan"``.
"""

import dataclasses
import json
import math
from enum import Enum
from typing import Any, Dict, TextIO

import numpy as np
from django.core.serializers.json import DjangoJSONEncoder

_SKIP = object()


def _float(value: float) -> Any:
    if math.isnan(value):
        return 'nan'
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return float(f'{value:.17g}')


def to_jsonable(value: Any) -> Any:
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return _float(float(value))
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        out: Dict[str, Any] = {}
        for item in dataclasses.fields(value):
            key = item.metadata.get('json', item.name)
            if key is None:
                continue
            out[key] = to_jsonable(getattr(value, item.name))
        return out
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [to_jsonable(v) for v in items]
    return value


def dumps(record: Any) -> str:
    return json.dumps(to_jsonable(record), cls=DjangoJSONEncoder, ensure_ascii=False, allow_nan=False)


class JsonLinesWriter:
    """Writes one JSON record per line and keeps what it wrote."""

    def __init__(self, stream: TextIO):
        self.stream = stream
        self.records = []

    def write(self, kind: str, **fields) -> Dict[str, Any]:
        record = to_jsonable({'record': kind, **fields})
        self.stream.write(json.dumps(record, cls=DjangoJSONEncoder, ensure_ascii=False, allow_nan=False) + '\n')
        self.records.append(record)
        return record
