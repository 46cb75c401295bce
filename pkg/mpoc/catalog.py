"""
Catalog of named MPOC instances.

Built-in entries:

    saddle                    f = (x1+1)^2 + (x2-1)^2,  F1 = x1, F2 = x2
    instability               f = x1^2 + x2^2,          F1 = x1, F2 = x2
    instability_perturbed(e)  f = (x1+e)^2 + (x2-e)^2,  F1 = x1, F2 = x2, e > 0

Each entry documents its T-stationary points. Lookup order is built-ins,
then in-process registrations (``register``), then the ``RegisteredProblem``
table.
"""

import logging
import re
import threading
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .exceptions import RejectedInput, UnknownProblem
from .problems import MpocProblem, coordinate_map, quadratic_function

logger = logging.getLogger(__name__)

_PERTURBED = re.compile(r'^instability_perturbed\(\s*([^()\s]+)\s*\)$')


@dataclass(frozen=True)
class DocumentedPoint:
    x: Tuple[float, ...]
    expected: str
    note: str = ''


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    name: str
    problem: MpocProblem
    description: str
    stationary_points: Tuple[DocumentedPoint, ...] = ()


def _planar_orthogonality(f, name: str) -> MpocProblem:
    return MpocProblem.build(
        2,
        f,
        F1=coordinate_map(2, [0], label='x1'),
        F2=coordinate_map(2, [1], label='x2'),
        name=name,
    )


def _shifted_norm(shift: Tuple[float, float], name: str) -> MpocProblem:
    # (x1 - a)^2 + (x2 - b)^2 = 1/2 x'(2I)x - 2(a, b).x + a^2 + b^2
    a, b = shift
    f = quadratic_function(2.0 * np.eye(2), [-2.0 * a, -2.0 * b], a * a + b * b, label=name)
    return _planar_orthogonality(f, name)


def saddle() -> CatalogEntry:
    return CatalogEntry(
        name='saddle',
        problem=_shifted_norm((-1.0, 1.0), 'saddle'),
        description='(x1+1)^2 + (x2-1)^2 s.t. x1*x2 = 0, x2 >= 0',
        stationary_points=(
            DocumentedPoint((-1.0, 0.0), 'NONDEGENERATE_LOCAL_MIN', 'minimizer on x2 = 0'),
            DocumentedPoint((0.0, 1.0), 'NONDEGENERATE_LOCAL_MIN', 'minimizer on x1 = 0'),
            DocumentedPoint((0.0, 0.0), 'NONDEGENERATE_SADDLE', 'biactive saddle, TI = 1'),
        ),
    )


def instability() -> CatalogEntry:
    return CatalogEntry(
        name='instability',
        problem=_shifted_norm((0.0, 0.0), 'instability'),
        description='x1^2 + x2^2 s.t. x1*x2 = 0, x2 >= 0',
        stationary_points=(
            DocumentedPoint((0.0, 0.0), 'DEGENERATE', 'both biactive multipliers vanish'),
        ),
    )


def instability_perturbed(epsilon: float) -> CatalogEntry:
    epsilon = float(epsilon)
    if not (np.isfinite(epsilon) and epsilon > 0):
        raise RejectedInput(f"perturbation must be a positive real, got {epsilon}")
    name = f'instability_perturbed({epsilon:g})'
    return CatalogEntry(
        name=name,
        problem=_shifted_norm((-epsilon, epsilon), name),
        description=f'(x1+{epsilon:g})^2 + (x2-{epsilon:g})^2 s.t. x1*x2 = 0, x2 >= 0',
        stationary_points=(
            DocumentedPoint((0.0, 0.0), 'NONDEGENERATE_SADDLE', 'biactive saddle'),
            DocumentedPoint((0.0, epsilon), 'NONDEGENERATE_LOCAL_MIN', 'global minimizer'),
            DocumentedPoint((-epsilon, 0.0), 'NONDEGENERATE_LOCAL_MIN', 'global minimizer'),
        ),
    )


BUILTINS: Dict[str, Callable[[], CatalogEntry]] = {
    'saddle': saddle,
    'instability': instability,
}

_registry: Dict[str, Callable[[], CatalogEntry]] = {}
_registry_lock = threading.Lock()


def register(name: str, builder: Callable[[], CatalogEntry]) -> None:
    """Register an in-process entry. Built-in names cannot be shadowed."""
    if name in BUILTINS or _PERTURBED.match(name):
        raise RejectedInput(f"{name!r} is a built-in catalog name")
    with _registry_lock:
        _registry[name] = builder


def unregister(name: str) -> None:
    with _registry_lock:
        _registry.pop(name, None)


def _stored_entry(name: str) -> Optional[CatalogEntry]:
    from django.apps import apps

    if not apps.ready:
        return None
    from .models import RegisteredProblem

    record = RegisteredProblem.objects.filter(name=name).first()
    return record.as_catalog_entry() if record is not None else None


def _stored_names() -> List[str]:
    from django.apps import apps

    if not apps.ready:
        return []
    from .models import RegisteredProblem

    return list(RegisteredProblem.objects.values_list('name', flat=True))


def available_names() -> List[str]:
    with _registry_lock:
        registered = list(_registry)
    return sorted(set(BUILTINS) | {'instability_perturbed(<epsilon>)'} | set(registered) | set(_stored_names()))


def catalog(name: str) -> CatalogEntry:
    """Look up a catalog entry by name."""
    name = name.strip()
    if name in BUILTINS:
        return BUILTINS[name]()

    match = _PERTURBED.match(name)
    if match:
        try:
            epsilon = float(match.group(1))
        except ValueError:
            raise UnknownProblem(name, available_names()) from None
        return instability_perturbed(epsilon)

    with _registry_lock:
        builder = _registry.get(name)
    if builder is not None:
        return builder()

    entry = _stored_entry(name)
    if entry is not None:
        logger.debug("catalog entry %s loaded from the database", name)
        return entry
    raise UnknownProblem(name, available_names())
