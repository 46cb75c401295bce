"""
Acceptance suites run by ``manage.py selftest``.

Each suite returns a ``SuiteResult``; a failed check is recorded with a short
message rather than raised, so one run reports every problem at once. The
random generators are shared with the test suite.

    1  saddle fixture: classification, multipliers and indices
    2  instability fixture and its perturbation
    3  regularization driver from seeded random starts
    4  T-stationarity of the relaxation <=> M-stationarity
    5  every T-stationary relaxed point is degenerate
    6  component counts of lower level sets of the saddle fixture
    7  S-stationarity implies T-stationarity, not conversely
    8  derivative checks and rotation invariance of the Hessian inertia
"""

import logging
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import ortho_group

from .catalog import BUILTINS, catalog, instability_perturbed
from .conf import default_tolerances
from .exceptions import MpocError
from .landscape import GridSpec, parse_levels, sweep_levels
from .nondegeneracy import (
    Classification,
    TangentBasis,
    classify_point,
    lagrangian_hessian,
    restricted_hessian,
    symmetric_eigenvalues,
    tangent_basis,
)
from .problems import MpocProblem, Tolerances, fd_derivative_check
from .scholtes import Schedule, multi_start, random_starts
from .scno import (
    CaseTag,
    RelaxedPoint,
    ScnoProblem,
    build_relaxation,
    degeneracy_audit,
    m_stationarity_check,
    quadratic_scno,
    relaxation_residual,
    s_stationarity_check,
    t_multipliers_from_m,
    t_stationarity_check_relaxation,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SuiteResult:
    number: int
    name: str
    passed: bool
    checks: int
    failures: Tuple[str, ...]
    elapsed: float


class _Tally:
    def __init__(self):
        self.checks = 0
        self.failures: List[str] = []

    def check(self, condition, message: str) -> bool:
        self.checks += 1
        if not condition:
            self.failures.append(message)
        return bool(condition)


# ========== RANDOM GENERATORS ==========

def random_quadratic_scno(rng: np.random.Generator, max_n: int = 6) -> ScnoProblem:
    """f = 1/2 x'Qx + c'x with Q = MM' + 0.1 I, n in 2..max_n, s in 0..n-1."""
    n = int(rng.integers(2, max_n + 1))
    s = int(rng.integers(0, n))
    M = rng.normal(size=(n, n))
    Q = M @ M.T + 0.1 * np.eye(n)
    c = rng.normal(size=n)
    return quadratic_scno(Q, c, s, name=f'random n={n} s={s}')


def _quadratic_data(scno: ScnoProblem) -> Tuple[np.ndarray, np.ndarray]:
    zero = np.zeros(scno.n)
    return scno.f.hessian_at(zero, 0), scno.gradient(zero)


def random_support(rng: np.random.Generator, scno: ScnoProblem) -> np.ndarray:
    size = int(rng.integers(0, scno.s + 1))
    return np.sort(rng.choice(scno.n, size=size, replace=False))


def m_stationary_x(scno: ScnoProblem, support: Sequence[int]) -> np.ndarray:
    """Solve Q_SS x_S = -c_S so the gradient vanishes on the support."""
    Q, c = _quadratic_data(scno)
    support = np.asarray(support, dtype=int)
    x = np.zeros(scno.n)
    if support.size:
        x[support] = np.linalg.solve(Q[np.ix_(support, support)], -c[support])
    return x


def random_y(
    rng: np.random.Generator, scno: ScnoProblem, x: np.ndarray, allow_zero: bool = True
) -> np.ndarray:
    """Feasible y: zero on the support of x, a mix of 0, 1 and fractions elsewhere."""
    zeros = np.flatnonzero(x == 0.0)
    y = np.zeros(scno.n)
    choices = rng.integers(0 if allow_zero else 1, 3, size=zeros.size)
    y[zeros] = np.where(choices == 0, 0.0, np.where(choices == 1, 1.0, rng.uniform(0.05, 0.95, size=zeros.size)))
    for i in zeros:
        if y.sum() >= scno.n - scno.s:
            break
        y[i] = 1.0
    return y


def random_relaxed_point(rng: np.random.Generator, scno: ScnoProblem, m_stationary: bool) -> RelaxedPoint:
    support = random_support(rng, scno)
    if m_stationary:
        x = m_stationary_x(scno, support)
    else:
        x = np.zeros(scno.n)
        x[support] = rng.uniform(0.5, 2.0, size=support.size) * rng.choice([-1.0, 1.0], size=support.size)
    return RelaxedPoint(x, random_y(rng, scno, x))


def s_stationary_point(rng: np.random.Generator, scno: ScnoProblem) -> RelaxedPoint:
    """M-stationary x with y > 0 on every zero of x, so I00 is empty."""
    x = m_stationary_x(scno, random_support(rng, scno))
    return RelaxedPoint(x, random_y(rng, scno, x, allow_zero=False))


def converse_witness() -> Tuple[ScnoProblem, RelaxedPoint]:
    """T-stationary relaxed point with a nonzero rho1 that is not S-stationary."""
    scno = quadratic_scno(2.0 * np.eye(2), [-2.0, -4.0], 1, r=5.0, name='(x1-1)^2 + (x2-2)^2')
    return scno, RelaxedPoint.of([0.0, 0.0], [1.0, 0.0])


# ========== SUITES ==========

def _saddle_suite(tally: _Tally, seed: int, tol: Tolerances) -> None:
    entry = catalog('saddle')
    problem = entry.problem
    for x in ((-1.0, 0.0), (0.0, 1.0)):
        _, report = classify_point(problem, x, tol)
        tally.check(
            report is not None and report.classification is Classification.NONDEGENERATE_LOCAL_MIN
            and report.TI == 0,
            f"saddle {x}: expected a nondegenerate local minimizer",
        )
    certificate, report = classify_point(problem, (0.0, 0.0), tol)
    multipliers = certificate.multipliers
    tally.check(
        report is not None and report.classification is Classification.NONDEGENERATE_SADDLE,
        "saddle (0,0): expected a nondegenerate saddle",
    )
    tally.check(
        abs(multipliers.rho1[0] - 2.0) <= 1e-8 and abs(multipliers.rho2[0] + 2.0) <= 1e-8,
        f"saddle (0,0): rho = ({multipliers.rho1}, {multipliers.rho2}), expected (2, -2)",
    )
    if report is not None:
        tally.check((report.QI, report.BI, report.TI) == (0, 1, 1),
                    f"saddle (0,0): (QI, BI, TI) = {(report.QI, report.BI, report.TI)}")


def _instability_suite(tally: _Tally, seed: int, tol: Tolerances) -> None:
    certificate, report = classify_point(catalog('instability').problem, (0.0, 0.0), tol)
    multipliers = certificate.multipliers
    tally.check(certificate.is_t_stationary, "instability (0,0): expected T-stationary")
    tally.check(
        np.allclose(multipliers.rho1, 0.0, atol=1e-8) and np.allclose(multipliers.rho2, 0.0, atol=1e-8),
        "instability (0,0): biactive multipliers should vanish",
    )
    tally.check(report is not None and report.classification is Classification.DEGENERATE,
                "instability (0,0): expected DEGENERATE")

    perturbed = instability_perturbed(0.1).problem
    for x in ((0.0, 0.0), (0.0, 0.1), (-0.1, 0.0)):
        certificate, _ = classify_point(perturbed, x, tol)
        tally.check(
            certificate.is_t_stationary and certificate.multipliers.residual_norm <= 1e-8,
            f"instability_perturbed(0.1) {x}: expected T-stationary",
        )


def _regularization_suite(tally: _Tally, seed: int, tol: Tolerances) -> None:
    entry = catalog('saddle')
    certified = [np.array(p.x) for p in entry.stationary_points]
    starts = random_starts([-2.0, -2.0], [2.0, 2.0], 20, seed)
    traces = multi_start(entry.problem, starts, Schedule(1.0, 0.1, 1e-10), tol)
    hits = 0
    for start, trace in zip(starts, traces):
        if not trace.converged:
            continue
        distance = min(np.linalg.norm(trace.limit_point - p) for p in certified)
        multipliers_ok = trace.multiplier_gap is not None and trace.multiplier_gap <= 1e-4
        if distance <= 1e-5 and multipliers_ok:
            hits += 1
        else:
            logger.info("start %s ended at %s (gap %s)", start, trace.limit_point, trace.multiplier_gap)
    tally.check(hits >= 18, f"regularization: {hits}/20 runs reached a certified point")


def _equivalence_cases(seed: int, tol: Tolerances, count: int = 200):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        scno = random_quadratic_scno(rng)
        point = random_relaxed_point(rng, scno, m_stationary=bool(rng.integers(0, 2)))
        yield scno, point


def _m_t_suite(tally: _Tally, seed: int, tol: Tolerances) -> None:
    for scno, point in _equivalence_cases(seed, tol):
        m_result = m_stationarity_check(scno, point.x, tol)
        certificate = t_stationarity_check_relaxation(scno, point, tol)
        tally.check(
            certificate.is_t_stationary == m_result.is_m_stationary,
            f"{scno.name}: T={certificate.is_t_stationary} but M={m_result.is_m_stationary} at {point.x}",
        )
        if m_result.is_m_stationary:
            multipliers = t_multipliers_from_m(scno, point, tol)
            residual = relaxation_residual(scno, point, multipliers, tol)
            tally.check(residual <= 1e-10, f"{scno.name}: constructive multipliers leave residual {residual:.3e}")


def _degeneracy_suite(tally: _Tally, seed: int, tol: Tolerances) -> None:
    for scno, point in _equivalence_cases(seed, tol):
        if not t_stationarity_check_relaxation(scno, point, tol).is_t_stationary:
            continue
        try:
            audit = degeneracy_audit(scno, point, tol)
        except MpocError as exc:
            tally.check(False, f"{scno.name} at {point.x}, {point.y}: {exc}")
            continue
        tally.check(audit.failed_conditions, f"{scno.name}: empty audit")
        tally.check(audit.case_tag in (CaseTag.CASE1, CaseTag.CASE2), f"{scno.name}: no case tag")


def _landscape_suite(tally: _Tally, seed: int, tol: Tolerances) -> None:
    entry = catalog('saddle')
    report = sweep_levels(
        entry.problem,
        GridSpec((-3.0, -3.0), (3.0, 3.0), 801),
        parse_levels('0.2:3.0:0.05'),
        [p.x for p in entry.stationary_points],
    )
    transitions = report.transitions()
    tally.check(len(transitions) == 2, f"landscape: {len(transitions)} changes, expected 2")
    if len(transitions) == 2:
        (first, a0, a1), (second, b0, b1) = transitions
        tally.check((a0, a1, b0, b1) == (0, 2, 2, 1), f"landscape: transitions {transitions}")
        tally.check(abs(first - 1.0) <= 0.05 + 1e-9, f"landscape: first change at {first}")
        tally.check(abs(second - 2.0) <= 0.05 + 1e-9, f"landscape: second change at {second}")


def _s_implies_t_suite(tally: _Tally, seed: int, tol: Tolerances) -> None:
    rng = np.random.default_rng(seed + 7)
    for _ in range(100):
        scno = random_quadratic_scno(rng)
        point = s_stationary_point(rng, scno)
        tally.check(s_stationarity_check(scno, point, tol), f"{scno.name}: generated point is not S-stationary")
        tally.check(t_stationarity_check_relaxation(scno, point, tol).is_t_stationary,
                    f"{scno.name}: S-stationary point fails T-stationarity")

    scno, point = converse_witness()
    certificate = t_stationarity_check_relaxation(scno, point, tol)
    tally.check(certificate.is_t_stationary, "converse witness is not T-stationary")
    tally.check(np.any(np.abs(certificate.multipliers.rho1) > tol.multiplier_zero),
                "converse witness has rho1 = 0")
    tally.check(not s_stationarity_check(scno, point, tol), "converse witness is S-stationary")


def _inertia(eigenvalues: np.ndarray, tol: Tolerances) -> Tuple[int, int, int]:
    return (
        int(np.sum(eigenvalues < -tol.eigen_singularity)),
        int(np.sum(np.abs(eigenvalues) <= tol.eigen_singularity)),
        int(np.sum(eigenvalues > tol.eigen_singularity)),
    )


def _rotation(rng: np.random.Generator, dim: int) -> np.ndarray:
    if dim == 1:
        return np.array([[rng.choice([-1.0, 1.0])]])
    return ortho_group.rvs(dim, random_state=rng)


def inertia_fixtures() -> List[Tuple[MpocProblem, Tuple[float, ...]]]:
    fixtures = []
    for name in list(BUILTINS) + ['instability_perturbed(0.1)']:
        entry = catalog(name)
        fixtures += [(entry.problem, p.x) for p in entry.stationary_points]
    scno, _ = converse_witness()
    relaxation = build_relaxation(scno)
    for x, y in (((1.0, 0.0), (0.0, 1.0)), ((0.0, 0.0), (0.6, 0.6)), ((0.0, 0.0), (1.0, 0.0))):
        fixtures.append((relaxation, tuple(x) + tuple(y)))
    return fixtures


def _hygiene_suite(tally: _Tally, seed: int, tol: Tolerances) -> None:
    rng = np.random.default_rng(seed)
    for name in list(BUILTINS) + ['instability_perturbed(0.1)']:
        problem = catalog(name).problem
        for probe in rng.uniform(-2.0, 2.0, size=(5, problem.n)):
            for label, smooth_map in problem.maps().items():
                error = fd_derivative_check(smooth_map, probe)
                tally.check(error <= 1e-5, f"{name}.{label} at {probe}: derivative error {error:.3e}")

    for problem, x in inertia_fixtures():
        certificate, _ = classify_point(problem, x, tol)
        if not certificate.is_t_stationary:
            tally.check(False, f"{problem.name} at {x}: fixture is not T-stationary")
            continue
        H = lagrangian_hessian(problem, x, certificate.multipliers)
        B = tangent_basis(problem, x, certificate.pattern)
        if B.p_eff == 0:
            continue
        reference = _inertia(symmetric_eigenvalues(restricted_hessian(H, B)), tol)
        for _ in range(50):
            rotated = TangentBasis(B.basis @ _rotation(rng, B.p_eff), B.p_eff)
            inertia = _inertia(symmetric_eigenvalues(restricted_hessian(H, rotated)), tol)
            if not tally.check(inertia == reference, f"{problem.name} at {x}: inertia {inertia} != {reference}"):
                break


SUITES: Dict[int, Tuple[str, Callable[[_Tally, int, Tolerances], None]]] = {
    1: ('saddle classification', _saddle_suite),
    2: ('instability and perturbation', _instability_suite),
    3: ('regularization convergence', _regularization_suite),
    4: ('M-stationarity equivalence', _m_t_suite),
    5: ('relaxation degeneracy', _degeneracy_suite),
    6: ('lower level set components', _landscape_suite),
    7: ('S-stationarity implies T-stationarity', _s_implies_t_suite),
    8: ('numerical hygiene', _hygiene_suite),
}


def run_suite(number: int, seed: int = 42, tol: Optional[Tolerances] = None) -> SuiteResult:
    name, body = SUITES[number]
    tol = tol or default_tolerances()
    tally = _Tally()
    started = time.perf_counter()
    try:
        body(tally, seed, tol)
    except MpocError as exc:
        logger.exception("suite %d raised", number)
        tally.check(False, f"{type(exc).__name__}: {exc}")
    elapsed = round(time.perf_counter() - started, 3)
    logger.info("suite %d (%s): %d checks, %d failures, %.2fs",
                number, name, tally.checks, len(tally.failures), elapsed)
    return SuiteResult(number, name, not tally.failures, tally.checks, tuple(tally.failures[:20]), elapsed)


def run_suites(seed: int = 42, only: Sequence[int] = (), tol: Optional[Tolerances] = None) -> List[SuiteResult]:
    numbers = sorted(only) if only else sorted(SUITES)
    return [run_suite(number, seed, tol) for number in numbers]
