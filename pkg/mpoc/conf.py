"""
Numerical defaults read from Django settings.

``MPOC_TOLERANCES``, ``MPOC_SCHEDULE``, ``MPOC_INNER_MAX_ITER`` and
``MPOC_SEED`` are defined in ``config/settings/base.py`` and may be overridden
per settings layer. When the toolkit is imported without configured settings
(plain library use) the built-in defaults below apply.
"""

from typing import Any, Dict

from django.conf import settings

DEFAULT_TOLERANCES: Dict[str, float] = {
    'activity': 1e-8,
    'stationarity_residual': 1e-8,
    'eigen_singularity': 1e-8,
    'multiplier_zero': 1e-7,
    'feasibility': 1e-8,
}
DEFAULT_SCHEDULE: Dict[str, float] = {'t0': 1.0, 'shrink': 0.1, 't_min': 1e-10}
DEFAULT_INNER_MAX_ITER = 500
DEFAULT_SEED = 42


def _setting(name: str, default: Any) -> Any:
    if not settings.configured:
        return default
    return getattr(settings, name, default)


def default_tolerances():
    from .problems import Tolerances

    return Tolerances(**{**DEFAULT_TOLERANCES, **_setting('MPOC_TOLERANCES', {})})


def resolve_tolerances(tol=None):
    return tol if tol is not None else default_tolerances()


def default_schedule():
    from .scholtes import Schedule

    return Schedule(**{**DEFAULT_SCHEDULE, **_setting('MPOC_SCHEDULE', {})})


def inner_max_iter() -> int:
    return int(_setting('MPOC_INNER_MAX_ITER', DEFAULT_INNER_MAX_ITER))


def default_seed() -> int:
    return int(_setting('MPOC_SEED', DEFAULT_SEED))
