"""
Sparsity-constrained optimization (SCNO) and its orthogonality relaxation.

SCNO:        min f(x)  s.t.  ||x||_0 <= s
Relaxation:  min f(x)  over (x, y) in R^2n with
             sum(y) >= n - s,  1 - y_i >= 0,  x_i * y_i = 0,  y_i >= 0

The relaxation is an MPOC with pairs F1_i = x_i, F2_i = y_i; ``y_i >= 0`` is
carried only by F2 >= 0. Index sets at a relaxed point:

    I1    = {x_i != 0}
    I00   = {x_i = 0, y_i = 0}
    I0neq = {x_i = 0, y_i != 0}
    I01   = {x_i = 0, y_i = 1}   (subset of I0neq)

T-stationarity of the relaxation is checked twice: once over the structured
basis vectors built from the index sets, once by the generic stationarity
module on ``build_relaxation`` output. The two verdicts must agree.

Zero tests use ``tol.activity``; the sparsity of x counts entries with
``|x_i| > tol.activity``.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg

from .conf import resolve_tolerances
from .exceptions import CrossCheckError, NotMStationary, RejectedInput
from .nondegeneracy import Classification, classify_point
from .problems import (
    FeasibilityVerdict,
    MpocProblem,
    SmoothMap,
    Tolerances,
    affine_map,
    as_point,
    coordinate_map,
    feasibility_check,
    pullback,
    quadratic_function,
)
from .stationarity import Condition, StationarityCertificate, t_stationarity_check

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ScnoProblem:
    n: int
    f: SmoothMap
    s: int
    name: str = ''

    def __post_init__(self):
        if int(self.n) < 1:
            raise RejectedInput(f"dimension must be positive, got {self.n}")
        if self.f.input_dim != self.n or self.f.output_dim != 1:
            raise RejectedInput(f"objective must map R^{self.n} to R")
        if not 0 <= self.s <= self.n - 1:
            raise RejectedInput(f"sparsity level s={self.s} outside 0..{self.n - 1}")

    def gradient(self, x) -> np.ndarray:
        return self.f.jacobian_at(x)[0]


def quadratic_scno(Q, c, s: int, r: float = 0.0, name: str = '') -> ScnoProblem:
    f = quadratic_function(Q, c, r)
    return ScnoProblem(f.input_dim, f, int(s), name=name)


@dataclass(frozen=True, eq=False)
class RelaxedPoint:
    x: np.ndarray
    y: np.ndarray

    @classmethod
    def of(cls, x, y) -> 'RelaxedPoint':
        x = np.asarray(x, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        if x.shape != y.shape:
            raise RejectedInput(f"x and y differ in length ({x.size} != {y.size})")
        return cls(x, y)

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])


@dataclass(frozen=True)
class RelaxIndexSets:
    I00: Tuple[int, ...]
    I01: Tuple[int, ...]
    I0neq: Tuple[int, ...]
    I1: Tuple[int, ...]

    @property
    def I0(self) -> Tuple[int, ...]:
        return tuple(sorted(self.I00 + self.I0neq))


@dataclass(frozen=True, eq=False)
class RelaxationMultipliers:
    index_sets: RelaxIndexSets = field(metadata={'json': None})
    mu_bar: float
    mu: np.ndarray
    sigma1: np.ndarray
    sigma2: np.ndarray
    rho1: np.ndarray
    rho2: np.ndarray

    def stacked(self, sum_active: bool) -> np.ndarray:
        head = [self.mu_bar] if sum_active else []
        return np.concatenate([head, self.mu, self.sigma1, self.sigma2, self.rho1, self.rho2])


@dataclass(frozen=True, eq=False)
class RelaxationCertificate:
    point: RelaxedPoint
    index_sets: RelaxIndexSets
    multipliers: RelaxationMultipliers
    sum_active: bool
    residual_norm: float
    is_t_stationary: bool
    violated_conditions: Tuple[Condition, ...]
    generic: StationarityCertificate = field(metadata={'json': None})


@dataclass(frozen=True)
class MStationarityResult:
    is_m_stationary: bool
    support: Tuple[int, ...]
    gradient_on_support: Tuple[float, ...]
    violating_index: Optional[int] = None


class CaseTag(str, Enum):
    CASE1 = 'CASE1'
    CASE2 = 'CASE2'


@dataclass(frozen=True)
class DegeneracyAudit:
    case_tag: CaseTag
    failed_conditions: Tuple[str, ...]
    detail: str
    generic_failed_conditions: Tuple[str, ...] = ()


# ========== RELAXATION ==========

def build_relaxation(scno: ScnoProblem) -> MpocProblem:
    n, s = scno.n, scno.s
    embedding = np.hstack([np.eye(n), np.zeros((n, n))])
    A = np.zeros((n + 1, 2 * n))
    A[0, n:] = 1.0
    A[1:, n:] = -np.eye(n)
    b = np.concatenate([[-(n - s)], np.ones(n)])
    return MpocProblem.build(
        2 * n,
        pullback(scno.f, embedding),
        g=affine_map(A, b, label='sum(y) - (n - s) ; 1 - y'),
        F1=coordinate_map(2 * n, range(n), label='x'),
        F2=coordinate_map(2 * n, range(n, 2 * n), label='y'),
        name=f'relaxation of {scno.name or "SCNO"} (n={n}, s={s})',
    )


def relaxation_feasibility(scno: ScnoProblem, point: RelaxedPoint, tol: Optional[Tolerances] = None) -> FeasibilityVerdict:
    tol = resolve_tolerances(tol)
    return feasibility_check(build_relaxation(scno), _stacked(scno, point), tol)


def _stacked(scno: ScnoProblem, point: RelaxedPoint) -> np.ndarray:
    return as_point(point.stacked(), 2 * scno.n, '(x, y)')


def _require_feasible(scno: ScnoProblem, point: RelaxedPoint, tol: Tolerances) -> None:
    verdict = relaxation_feasibility(scno, point, tol)
    if not verdict.feasible:
        raise RejectedInput(
            f"relaxed point is infeasible: violation {verdict.max_violation:.3e} at {verdict.worst}"
        )


def relax_index_sets(point: RelaxedPoint, tol: Optional[Tolerances] = None) -> RelaxIndexSets:
    tol = resolve_tolerances(tol)
    x_zero = np.abs(point.x) <= tol.activity
    y_zero = np.abs(point.y) <= tol.activity
    y_one = np.abs(point.y - 1.0) <= tol.activity

    def indices(mask):
        return tuple(int(i) for i in np.flatnonzero(mask))

    return RelaxIndexSets(
        I00=indices(x_zero & y_zero),
        I01=indices(x_zero & y_one),
        I0neq=indices(x_zero & ~y_zero),
        I1=indices(~x_zero),
    )


def _sum_slack(scno: ScnoProblem, point: RelaxedPoint) -> float:
    return float(np.sum(point.y) - (scno.n - scno.s))


def _structured_basis(n: int, sets: RelaxIndexSets, sum_active: bool) -> np.ndarray:
    """Columns in the order mu_bar, mu (I01), sigma1 (I0neq), sigma2 (I1), rho1, rho2 (I00)."""
    columns: List[np.ndarray] = []

    def unit(i, block, sign=1.0):
        v = np.zeros(2 * n)
        v[block * n + i] = sign
        return v

    if sum_active:
        columns.append(np.concatenate([np.zeros(n), np.ones(n)]))
    columns += [unit(i, 1, -1.0) for i in sets.I01]
    columns += [unit(i, 0) for i in sets.I0neq]
    columns += [unit(i, 1) for i in sets.I1]
    columns += [unit(i, 0) for i in sets.I00]
    columns += [unit(i, 1) for i in sets.I00]
    return np.array(columns).T.reshape(2 * n, len(columns))


def _split(sets: RelaxIndexSets, sum_active: bool, w: np.ndarray) -> RelaxationMultipliers:
    offset = 1 if sum_active else 0
    mu_bar = float(w[0]) if sum_active else 0.0
    sizes = [len(sets.I01), len(sets.I0neq), len(sets.I1), len(sets.I00), len(sets.I00)]
    parts = np.split(np.asarray(w[offset:], dtype=float), np.cumsum(sizes)[:-1])
    return RelaxationMultipliers(sets, mu_bar, *parts)


def relaxation_residual(scno: ScnoProblem, point: RelaxedPoint, multipliers: RelaxationMultipliers, tol: Optional[Tolerances] = None) -> float:
    """Residual of the structured gradient decomposition for given multipliers."""
    tol = resolve_tolerances(tol)
    sum_active = abs(_sum_slack(scno, point)) <= tol.activity
    B = _structured_basis(scno.n, multipliers.index_sets, sum_active)
    rhs = np.concatenate([scno.gradient(point.x), np.zeros(scno.n)])
    return float(np.linalg.norm(B @ multipliers.stacked(sum_active) - rhs))


# ========== STATIONARITY NOTIONS ==========

def m_stationarity_check(scno: ScnoProblem, x, tol: Optional[Tolerances] = None) -> MStationarityResult:
    """Partial derivatives of f vanish on the support of x."""
    tol = resolve_tolerances(tol)
    x = as_point(x, scno.n)
    support = np.flatnonzero(np.abs(x) > tol.activity)
    if support.size > scno.s:
        raise RejectedInput(f"x has {support.size} nonzero entries, sparsity level is {scno.s}")
    gradient = scno.gradient(x)[support]
    bad = support[np.abs(gradient) > tol.stationarity_residual]
    return MStationarityResult(
        is_m_stationary=not bad.size,
        support=tuple(int(i) for i in support),
        gradient_on_support=tuple(float(v) for v in gradient),
        violating_index=int(bad[0]) if bad.size else None,
    )


def t_stationarity_check_relaxation(scno: ScnoProblem, point: RelaxedPoint, tol: Optional[Tolerances] = None) -> RelaxationCertificate:
    tol = resolve_tolerances(tol)
    _require_feasible(scno, point, tol)
    sets = relax_index_sets(point, tol)
    sum_active = abs(_sum_slack(scno, point)) <= tol.activity

    B = _structured_basis(scno.n, sets, sum_active)
    rhs = np.concatenate([scno.gradient(point.x), np.zeros(scno.n)])
    if B.shape[1]:
        w = scipy.linalg.lstsq(B, rhs, lapack_driver='gelsd')[0]
    else:
        w = np.zeros(0)
    residual = float(np.linalg.norm(B @ w - rhs))
    multipliers = _split(sets, sum_active, w)

    violated = []
    if residual > tol.stationarity_residual:
        violated.append(Condition.GRAD_RESIDUAL)
    if multipliers.mu_bar < -tol.multiplier_zero or np.any(multipliers.mu < -tol.multiplier_zero):
        violated.append(Condition.MU_SIGN)
    if np.any((np.abs(multipliers.rho1) > tol.multiplier_zero) & (multipliers.rho2 > tol.multiplier_zero)):
        violated.append(Condition.RHO_SIGN)

    generic = t_stationarity_check(build_relaxation(scno), _stacked(scno, point), tol)
    if generic.is_t_stationary != (not violated):
        raise CrossCheckError(
            f"structured verdict {not violated} disagrees with the generic verdict "
            f"{generic.is_t_stationary} at x={point.x.tolist()}, y={point.y.tolist()}"
        )

    return RelaxationCertificate(
        point=point,
        index_sets=sets,
        multipliers=multipliers,
        sum_active=sum_active,
        residual_norm=residual,
        is_t_stationary=not violated,
        violated_conditions=tuple(violated),
        generic=generic,
    )


def t_multipliers_from_m(scno: ScnoProblem, point: RelaxedPoint, tol: Optional[Tolerances] = None) -> RelaxationMultipliers:
    """
    Constructive T-multipliers for an M-stationary x.

    mu_bar = 0, mu = 0 on I01, sigma1 = df/dx on I0neq, sigma2 = 0 on I1,
    rho1 = df/dx and rho2 = 0 on I00.
    """
    tol = resolve_tolerances(tol)
    _require_feasible(scno, point, tol)
    check = m_stationarity_check(scno, point.x, tol)
    if not check.is_m_stationary:
        raise NotMStationary(
            f"x is not M-stationary: df/dx_{check.violating_index} does not vanish",
            index=check.violating_index,
        )
    sets = relax_index_sets(point, tol)
    gradient = scno.gradient(point.x)
    pick = lambda indices: gradient[np.asarray(indices, dtype=int)]  # noqa: E731
    return RelaxationMultipliers(
        index_sets=sets,
        mu_bar=0.0,
        mu=np.zeros(len(sets.I01)),
        sigma1=pick(sets.I0neq),
        sigma2=np.zeros(len(sets.I1)),
        rho1=pick(sets.I00),
        rho2=np.zeros(len(sets.I00)),
    )


def s_stationarity_check(scno: ScnoProblem, point: RelaxedPoint, tol: Optional[Tolerances] = None) -> bool:
    """Df(x) is supported on I0neq: it vanishes on I1 and I00."""
    tol = resolve_tolerances(tol)
    _require_feasible(scno, point, tol)
    sets = relax_index_sets(point, tol)
    gradient = scno.gradient(point.x)
    outside = np.asarray(sets.I1 + sets.I00, dtype=int)
    return bool(np.all(np.abs(gradient[outside]) <= tol.stationarity_residual))


def canonical_completion(scno: ScnoProblem, x, tol: Optional[Tolerances] = None) -> RelaxedPoint:
    """y_i = 1 on the n - s smallest indices of the zero set of x, 0 elsewhere."""
    tol = resolve_tolerances(tol)
    x = as_point(x, scno.n)
    zeros = np.flatnonzero(np.abs(x) <= tol.activity)
    needed = scno.n - scno.s
    if zeros.size < needed:
        raise RejectedInput(f"x has {scno.n - zeros.size} nonzero entries, sparsity level is {scno.s}")
    y = np.zeros(scno.n)
    y[zeros[:needed]] = 1.0
    return RelaxedPoint(x.copy(), y)


def mixed_integer_program_text(scno: ScnoProblem) -> str:
    """The binary reformulation of SCNO as text. It is never solved here."""
    n, s = scno.n, scno.s
    return '\n'.join([
        f"minimize    f(x)    [{scno.f.label or 'objective'}]",
        f"over        x in R^{n}, y in {{0,1}}^{n}",
        f"subject to  y_0 + ... + y_{n - 1} >= {n - s}",
        f"            x_i * y_i = 0,    i = 0..{n - 1}",
    ])


# ========== DEGENERACY ==========

def degeneracy_audit(scno: ScnoProblem, point: RelaxedPoint, tol: Optional[Tolerances] = None) -> DegeneracyAudit:
    """
    Name the nondegeneracy condition that must fail at a T-stationary relaxed point.

    Case 1 (sum(y) = n - s): ND1 when I01 and I00 cover I0, else ND2 (mu_bar = 0).
    Case 2 (sum(y) > n - s): ND2 when I01 is nonempty, else ND3 when I00 is
    nonempty, else ND4 (the tangent direction (0, e_i), i in I0, has zero
    curvature).
    """
    tol = resolve_tolerances(tol)
    certificate = t_stationarity_check_relaxation(scno, point, tol)
    if not certificate.is_t_stationary:
        raise RejectedInput("degeneracy audit needs a T-stationary relaxed point")
    sets = certificate.index_sets

    if abs(_sum_slack(scno, point)) <= tol.activity:
        case = CaseTag.CASE1
        if set(sets.I01) | set(sets.I00) == set(sets.I0):
            failed, detail = ('ND1',), 'I01 and I00 cover I0: the y-gradients are dependent'
        else:
            failed, detail = ('ND2',), 'some 0 < y_i < 1 on I0 forces mu_bar = 0'
    else:
        case = CaseTag.CASE2
        if sets.I01:
            failed, detail = ('ND2',), f'mu_i = 0 for i in I01={list(sets.I01)}'
        elif sets.I00:
            failed, detail = ('ND3',), f'rho2_i = 0 for i in I00={list(sets.I00)}'
        else:
            failed, detail = ('ND4',), f'zero curvature along (0, e_i), i in I0={list(sets.I0)}'

    _, report = classify_point(build_relaxation(scno), _stacked(scno, point), tol)
    if report is None or report.classification is not Classification.DEGENERATE:
        raise CrossCheckError(
            f"generic classifier does not report degeneracy at x={point.x.tolist()}, y={point.y.tolist()}"
        )
    generic_failed = report.failed_conditions()
    if not set(failed) <= set(generic_failed):
        raise CrossCheckError(
            f"{case.value} predicts {failed} but the generic classifier reports {generic_failed}"
        )
    return DegeneracyAudit(case, failed, detail, generic_failed)
