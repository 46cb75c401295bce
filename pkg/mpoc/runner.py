"""
Run configuration and dispatch for the management commands.

``run(config, stream)`` executes one subcommand and writes JSON records, one
per line, to ``stream`` (or to ``config.output``). The returned ``RunOutcome``
carries the exit status:

    0  success / positive verdict
    2  checked and negative (e.g. a point is not T-stationary)
    1  the check could not be carried out (bad input, unreadable file)

Logging goes to stderr through the ``mpoc`` logger; stdout only ever sees
records.
"""

import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, TextIO, Tuple

import decouple
import numpy as np
from django.core.exceptions import ValidationError

from . import conf
from .catalog import CatalogEntry, available_names, catalog
from .exceptions import MpocError, RejectedInput
from .landscape import GridSpec, local_grid_witness, render_svg, sweep_levels, write_csv
from .nondegeneracy import classify_point
from .problem_files import load_document, load_problem, problem_from_document
from .problems import MpocProblem, Tolerances, feasibility_check
from .scholtes import InnerSolverOptions, Schedule, multi_start, random_starts
from .scno import (
    RelaxedPoint,
    ScnoProblem,
    canonical_completion,
    degeneracy_audit,
    m_stationarity_check,
    mixed_integer_program_text,
    s_stationarity_check,
    t_stationarity_check_relaxation,
)
from .serializers import JsonLinesWriter

logger = logging.getLogger(__name__)

SUBCOMMANDS = ('classify', 'regularize', 'scno', 'landscape', 'catalog', 'selftest')

OK, ERROR, NEGATIVE = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    problem: Optional[str] = None
    problem_file: Optional[str] = None
    points: Tuple[Tuple[float, ...], ...] = ()
    x0: Optional[Tuple[float, ...]] = None
    starts: Optional[int] = None
    box: Optional[Tuple[float, ...]] = None
    workers: int = 1
    min_converged: Optional[int] = None
    trace: bool = False
    witness: bool = False
    s: Optional[int] = None
    y: Optional[Tuple[float, ...]] = None
    resolution: int = 801
    levels: Optional[Tuple[float, ...]] = None
    csv_path: Optional[str] = None
    svg_path: Optional[str] = None
    register: Optional[str] = None
    description: str = ''
    suites: Tuple[int, ...] = ()
    tolerances: Optional[Tolerances] = None
    schedule: Optional[Schedule] = None
    seed: int = 42
    output: Optional[str] = None
    save: bool = False

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise RejectedInput(f"unknown subcommand {self.subcommand!r}")

    @staticmethod
    def default_seed() -> int:
        return conf.default_seed()

    @property
    def source(self) -> str:
        return self.problem or self.problem_file or ''


@dataclass
class RunOutcome:
    status: int
    records: List[dict] = field(default_factory=list)
    message: str = ''


def effective_seed(config: RunConfig) -> int:
    """The MPOC_SEED environment variable wins over the configured seed."""
    return decouple.config('MPOC_SEED', default=config.seed, cast=int)


def _resolve(config: RunConfig) -> Tuple[MpocProblem, Optional[CatalogEntry]]:
    if config.problem:
        entry = catalog(config.problem)
        return entry.problem, entry
    return load_problem(config.problem_file), None


# ========== SUBCOMMANDS ==========

def _classify(config: RunConfig, out: JsonLinesWriter, tol: Tolerances) -> int:
    problem, entry = _resolve(config)
    documented = {tuple(p.x): p for p in entry.stationary_points} if entry else {}
    points = config.points or tuple(documented)
    if not points:
        raise RejectedInput("no points given and the problem documents none")

    status = OK
    for x in points:
        verdict = feasibility_check(problem, x, tol)
        expected = documented.get(tuple(x))
        if not verdict.feasible:
            out.write('classification', problem=problem.name, x=x, feasible=False,
                      max_violation=verdict.max_violation, worst=verdict.worst, is_t_stationary=False)
            status = NEGATIVE
            continue
        certificate, report = classify_point(problem, x, tol)
        fields = dict(
            problem=problem.name,
            x=certificate.point,
            feasible=True,
            is_t_stationary=certificate.is_t_stationary,
            violated_conditions=certificate.violated_conditions,
            active_pattern=certificate.pattern,
            multipliers=certificate.multipliers,
            licq=certificate.licq,
        )
        if report is not None:
            fields.update(
                classification=report.classification,
                QI=report.QI,
                BI=report.BI,
                TI=report.TI,
                failed_conditions=report.failed_conditions(),
                nondegeneracy=report,
            )
        if expected is not None and expected.expected:
            fields['expected'] = expected.expected
        if config.witness and problem.n <= 3:
            fields['local_witness'] = local_grid_witness(problem, certificate.point, tol=tol)
        out.write('classification', **fields)
        if not certificate.is_t_stationary:
            status = NEGATIVE
    return status


def _regularize(config: RunConfig, out: JsonLinesWriter, tol: Tolerances, seed: int) -> int:
    problem, _ = _resolve(config)
    schedule = config.schedule or conf.default_schedule()
    if config.x0 is not None:
        starts = np.array([config.x0], dtype=float)
    else:
        box = np.asarray(config.box, dtype=float)
        if box.size != 2 * problem.n:
            raise RejectedInput(f"box needs {2 * problem.n} numbers for n={problem.n}, got {box.size}")
        starts = random_starts(box[::2], box[1::2], config.starts, seed)

    traces = multi_start(problem, starts, schedule, tol, InnerSolverOptions.from_settings(), config.workers)
    converged = 0
    for index, (start, trace) in enumerate(zip(starts, traces)):
        if config.trace:
            for stage, iterate in enumerate(trace.iterates):
                out.write('stage', run=index, stage=stage, iterate=iterate)
        fields = dict(
            run=index,
            start=start,
            converged=trace.converged,
            limit_point=trace.limit_point,
            stages=len(trace.schedule),
            final_t=trace.schedule[-1],
            failure_stage=trace.failure_stage,
        )
        if trace.certificate is not None:
            fields.update(
                is_t_stationary=trace.certificate.is_t_stationary,
                active_pattern=trace.certificate.pattern,
                direct_multipliers=trace.certificate.multipliers,
                recovered_multipliers=trace.recovered,
                multiplier_gap=trace.multiplier_gap,
            )
        out.write('regularization', **fields)
        converged += bool(trace.converged)

    required = len(traces) if config.min_converged is None else config.min_converged
    out.write('regularization_summary', problem=problem.name, seed=seed, runs=len(traces),
              converged=converged, required=required)
    return OK if converged >= required else NEGATIVE


def _scno(config: RunConfig, out: JsonLinesWriter, tol: Tolerances) -> int:
    document = load_document(config.problem_file)
    base = problem_from_document(document, config.problem_file)
    scno = ScnoProblem(base.n, base.f, config.s, name=base.name)
    x = np.asarray(config.points[0], dtype=float)
    point = RelaxedPoint.of(x, config.y) if config.y is not None else canonical_completion(scno, x, tol)

    m_result = m_stationarity_check(scno, point.x, tol)
    certificate = t_stationarity_check_relaxation(scno, point, tol)
    s_result = s_stationarity_check(scno, point, tol)
    fields = dict(
        problem=scno.name,
        n=scno.n,
        s=scno.s,
        x=point.x,
        y=point.y,
        y_completed=config.y is None,
        m_stationarity=m_result,
        s_stationary=s_result,
        t_stationary=certificate.is_t_stationary,
        violated_conditions=certificate.violated_conditions,
        index_sets=certificate.index_sets,
        multipliers=certificate.multipliers,
        residual_norm=certificate.residual_norm,
        program=mixed_integer_program_text(scno),
    )
    if certificate.is_t_stationary:
        fields['degeneracy_audit'] = degeneracy_audit(scno, point, tol)
    out.write('scno', **fields)
    return OK if certificate.is_t_stationary else NEGATIVE


def _landscape(config: RunConfig, out: JsonLinesWriter) -> int:
    problem, entry = _resolve(config)
    grid = GridSpec.from_box(config.box, config.resolution)
    stationary = [p.x for p in entry.stationary_points] if entry else []
    started = time.perf_counter()
    report = sweep_levels(problem, grid, config.levels, stationary)

    for level, count, born, joined in zip(
        report.levels, report.betti0_per_level, report.components_created, report.components_merged
    ):
        out.write('level', level=level, betti0=count, created=born, merged=joined)
    if config.csv_path:
        with open(config.csv_path, 'w', newline='', encoding='utf-8') as handle:
            write_csv(report, handle)
    if config.svg_path:
        Path(config.svg_path).write_text(render_svg(report, title=problem.name), encoding='utf-8')

    out.write(
        'landscape',
        problem=problem.name,
        box=config.box,
        resolution=grid.resolution,
        delta=grid.delta,
        change_levels=report.change_levels,
        transitions=report.transitions(),
        stationary_values=report.stationary_values,
        minima_crossed=sum(report.components_created),
        merges=sum(report.components_merged),
        compactness_note=report.compactness_note,
        elapsed=round(time.perf_counter() - started, 3),
    )
    return OK


def _catalog(config: RunConfig, out: JsonLinesWriter) -> int:
    if config.register:
        from .models import RegisteredProblem

        document = load_document(config.problem_file)
        record = RegisteredProblem(name=config.register, description=config.description, document=document)
        record.full_clean()
        record.save()
        logger.info("registered problem %s", record.name)
        out.write('registered', name=record.name, problem=str(record.build()))
        return OK

    for name in available_names():
        if name.endswith('(<epsilon>)'):
            out.write('catalog_entry', name=name, description='(x1+e)^2 + (x2-e)^2 s.t. x1*x2 = 0, x2 >= 0, e > 0')
            continue
        entry = catalog(name)
        out.write(
            'catalog_entry',
            name=entry.name,
            description=entry.description,
            n=entry.problem.n,
            k=entry.problem.k,
            stationary_points=entry.stationary_points,
        )
    return OK


def _selftest(config: RunConfig, out: JsonLinesWriter, seed: int) -> int:
    from .selftest import run_suites

    results = run_suites(seed=seed, only=config.suites)
    for result in results:
        out.write('suite', **asdict(result))
    passed = all(r.passed for r in results)
    out.write('selftest_summary', seed=seed, suites=len(results), passed=passed)
    return OK if passed else NEGATIVE


# ========== ENTRY POINT ==========

def _dispatch(config: RunConfig, out: JsonLinesWriter, tol: Tolerances, seed: int) -> int:
    command = config.subcommand
    if command == 'classify':
        return _classify(config, out, tol)
    if command == 'regularize':
        return _regularize(config, out, tol, seed)
    if command == 'scno':
        return _scno(config, out, tol)
    if command == 'landscape':
        return _landscape(config, out)
    if command == 'catalog':
        return _catalog(config, out)
    return _selftest(config, out, seed)


def _persist(config: RunConfig, outcome: RunOutcome, seed: int) -> None:
    from .models import RunRecord

    RunRecord.objects.create(
        subcommand=config.subcommand,
        problem=config.source,
        verdict=RunRecord.verdict_for(outcome.status),
        seed=seed,
        records=outcome.records,
    )


def run(config: RunConfig, stream: TextIO) -> RunOutcome:
    """Execute ``config`` and report its records and exit status."""
    seed = effective_seed(config)
    tol = config.tolerances or conf.default_tolerances()
    handle = None
    out = JsonLinesWriter(stream)
    logger.info("running %s on %s (seed %d)", config.subcommand, config.source or '-', seed)
    try:
        if config.output:
            handle = open(config.output, 'w', encoding='utf-8')
            out = JsonLinesWriter(handle)
        status = _dispatch(config, out, tol, seed)
        outcome = RunOutcome(status, out.records)
    except (MpocError, ValidationError, OSError) as exc:
        message = '; '.join(exc.messages) if isinstance(exc, ValidationError) else str(exc)
        logger.error("%s failed: %s", config.subcommand, message)
        out.write('error', subcommand=config.subcommand, error=type(exc).__name__, message=message)
        outcome = RunOutcome(ERROR, out.records, message)
    finally:
        if handle is not None:
            handle.close()

    if config.save:
        _persist(config, outcome, seed)
    return outcome
