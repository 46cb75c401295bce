"""
Read-only JSON API for the MPOC toolkit.

Endpoints:
    GET /api/catalog/              catalog names with descriptions
    GET /api/catalog/<name>/       one entry, its documented points and their classification
    GET /api/runs/                 latest 20 saved runs
    GET /health/                   liveness probe
"""

import logging

from django.http import HttpResponse, JsonResponse
from django.views.decorators.http import require_GET

from .catalog import available_names, catalog
from .exceptions import MpocError, UnknownProblem
from .models import RunRecord
from .nondegeneracy import classify_point
from .serializers import to_jsonable

logger = logging.getLogger(__name__)


def _point_summary(problem, point):
    certificate, report = classify_point(problem, point.x)
    return {
        'x': point.x,
        'expected': point.expected,
        'note': point.note,
        'is_t_stationary': certificate.is_t_stationary,
        'multipliers': certificate.multipliers,
        'classification': report.classification if report else None,
        'TI': report.TI if report else None,
    }


@require_GET
def api_catalog_list(request):
    """
    Catalog names
    Example: GET /api/catalog/
    """
    entries = []
    for name in available_names():
        if name.endswith('(<epsilon>)'):
            entries.append({'name': name, 'parametric': True})
            continue
        entry = catalog(name)
        entries.append({
            'name': entry.name,
            'description': entry.description,
            'n': entry.problem.n,
            'k': entry.problem.k,
            'parametric': False,
        })
    return JsonResponse({
        'success': True,
        'count': len(entries),
        'entries': entries,
    })


@require_GET
def api_catalog_entry(request, name):
    """
    One catalog entry with its documented points classified
    Example: GET /api/catalog/saddle/
    """
    try:
        entry = catalog(name)
        points = [_point_summary(entry.problem, p) for p in entry.stationary_points]
    except UnknownProblem as exc:
        return JsonResponse({
            'success': False,
            'error': str(exc),
            'available': exc.available,
        }, status=404)
    except MpocError as exc:
        logger.warning("catalog entry %s could not be evaluated: %s", name, exc)
        return JsonResponse({'success': False, 'error': str(exc)}, status=400)

    return JsonResponse({
        'success': True,
        'entry': to_jsonable({
            'name': entry.name,
            'description': entry.description,
            'problem': str(entry.problem),
            'n': entry.problem.n,
            'k': entry.problem.k,
            'stationary_points': points,
        }),
    })


@require_GET
def api_runs_list(request):
    """
    Latest saved runs
    Example: GET /api/runs/
    """
    runs = RunRecord.objects.all()[:20]
    runs_data = [{
        'id': run.id,
        'subcommand': run.subcommand,
        'problem': run.problem,
        'verdict': run.verdict,
        'seed': run.seed,
        'record_count': run.record_count(),
        'created_at': run.created_at.isoformat(),
    } for run in runs]
    return JsonResponse({
        'success': True,
        'count': len(runs_data),
        'runs': runs_data,
    })


def health(request):
    return HttpResponse("OK")
