"""
Scholtes-type regularization of MPOC.

For t > 0 the orthogonality constraints are relaxed to

    F2_m(x) >= 0,   t - F1_m(x) F2_m(x) >= 0,   F1_m(x) F2_m(x) + t >= 0

giving a smooth NLP whose KKT points converge to T-stationary points of the
original problem as t -> 0. The inequality block of the regularized problem
is ordered ``g, F2, t - F1*F2, F1*F2 + t`` with multipliers
``mu, eta, eta_le, eta_ge``.

Inner solver
------------
1. ``scipy.optimize.minimize(method='SLSQP')`` from the warm start.
2. Constraints within a t-scaled band of zero become candidates; multipliers
   are estimated by bounded least squares (``lsq_linear``).
3. Newton steps on the KKT system of the candidate set polish the point to
   machine precision. Candidates whose multipliers turn negative are dropped
   and the polish is repeated. A polish that breaks feasibility is discarded.
4. If the Lagrangian Hessian reduced to the active null space has negative
   curvature, the solver steps along it, re-solves and keeps the new point
   only when the objective strictly decreases. The direction's sign points
   toward an anchor (the driver's start point).

The driver shrinks t geometrically, warm starting each stage from the last
iterate, and recovers limiting T-multipliers from the last iterate's eta's.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.optimize import lsq_linear, minimize

from . import conf
from .exceptions import RejectedInput
from .problems import (
    ActivePattern,
    MpocProblem,
    SmoothMap,
    Tolerances,
    affine_transform,
    as_point,
    product_map,
    stack_maps,
)
from .stationarity import (
    MultiplierSet,
    StationarityCertificate,
    active_constraint_jacobian,
    solve_multipliers,
    t_stationarity_check,
)

logger = logging.getLogger(__name__)

_ESCAPE_SCALES = (1.0, 4.0)


@dataclass(frozen=True)
class Schedule:
    t0: float = 1.0
    shrink: float = 0.1
    t_min: float = 1e-10

    def __post_init__(self):
        if not (math.isfinite(self.t0) and self.t0 > 0):
            raise RejectedInput(f"t0 must be positive, got {self.t0}")
        if not 0 < self.shrink < 1:
            raise RejectedInput(f"shrink must lie in (0, 1), got {self.shrink}")
        if not (math.isfinite(self.t_min) and self.t_min > 0):
            raise RejectedInput(f"t_min must be positive, got {self.t_min}")

    def t(self, stage: int) -> float:
        return self.t0 * self.shrink ** stage

    @property
    def max_stages(self) -> int:
        if self.t_min >= self.t0:
            return 1
        return int(math.ceil(math.log(self.t_min / self.t0) / math.log(self.shrink))) + 2


@dataclass(frozen=True)
class InnerSolverOptions:
    max_iter: int = 500
    newton_steps: int = 25
    escape_saddles: bool = True
    max_escapes: int = 5
    escape_step: float = 0.1

    @classmethod
    def from_settings(cls, **overrides) -> 'InnerSolverOptions':
        return cls(**{'max_iter': conf.inner_max_iter(), **overrides})


# ========== REGULARIZED PROBLEM ==========

@dataclass(frozen=True, eq=False)
class RegularizedProblem:
    """MPOC_t: the base problem with orthogonality replaced by the t-band."""

    base: MpocProblem
    t: float
    equalities: SmoothMap
    inequalities: SmoothMap

    @property
    def num_ineq(self) -> int:
        return self.inequalities.output_dim

    def blocks(self) -> Tuple[slice, slice, slice, slice]:
        """Index slices of the g, F2, t - F1F2 and F1F2 + t blocks."""
        J, k = self.base.num_ineq, self.base.k
        return (
            slice(0, J),
            slice(J, J + k),
            slice(J + k, J + 2 * k),
            slice(J + 2 * k, J + 3 * k),
        )

    def violation(self, x) -> float:
        x = np.asarray(x, dtype=float)
        h = self.equalities.evaluate(x)
        c = self.inequalities.evaluate(x)
        return float(max(
            np.max(np.abs(h), initial=0.0),
            np.max(np.maximum(0.0, -c), initial=0.0),
        ))

    def is_feasible(self, x, tol: Optional[Tolerances] = None) -> bool:
        tol = conf.resolve_tolerances(tol)
        return self.violation(x) <= tol.feasibility


def build_regularized(problem: MpocProblem, t: float) -> RegularizedProblem:
    t = float(t)
    if not (math.isfinite(t) and t > 0):
        raise RejectedInput(f"regularization parameter must be positive, got {t}")
    product = product_map(problem.F1, problem.F2, label='F1*F2')
    inequalities = stack_maps(
        problem.g,
        problem.F2,
        affine_transform(product, -1.0, t, label='t - F1*F2'),
        affine_transform(product, 1.0, t, label='F1*F2 + t'),
        label=f'M_t(t={t:g})',
    )
    return RegularizedProblem(problem, t, problem.h, inequalities)


# ========== INNER KKT SOLVE ==========

@dataclass(frozen=True, eq=False)
class InnerKktPoint:
    x: np.ndarray
    lam: np.ndarray = field(metadata={'json': 'lambda'})
    mu: np.ndarray
    eta: np.ndarray
    eta_ge: np.ndarray
    eta_le: np.ndarray
    kkt_residual: float
    t: float
    objective: float
    F1_values: np.ndarray = field(metadata={'json': None})
    F2_values: np.ndarray = field(metadata={'json': None})
    converged: bool = True
    iterations: int = 0
    message: str = ''


@dataclass
class _Candidate:
    x: np.ndarray
    lam: np.ndarray
    nu: np.ndarray
    active: np.ndarray


def _lagrangian_gradient(reg: RegularizedProblem, x, lam, nu) -> np.ndarray:
    return (
        reg.base.gradient(x)
        - reg.equalities.jacobian_at(x).T @ lam
        - reg.inequalities.jacobian_at(x).T @ nu
    )


def _lagrangian_hessian(reg: RegularizedProblem, x, lam, nu) -> np.ndarray:
    H = reg.base.objective_hessian(x).copy()
    for i in np.flatnonzero(lam):
        H -= lam[i] * reg.equalities.hessian_at(x, int(i))
    for j in np.flatnonzero(nu):
        H -= nu[j] * reg.inequalities.hessian_at(x, int(j))
    return 0.5 * (H + H.T)


def _candidate_band(reg: RegularizedProblem, tol: Tolerances) -> np.ndarray:
    band = np.full(reg.num_ineq, max(tol.activity, 1e-10))
    g_block = reg.blocks()[0]
    band[g_block.stop:] = min(1e-6, 0.5 * reg.t)
    return band


def _estimate_multipliers(reg: RegularizedProblem, x, active: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    num_eq = reg.equalities.output_dim
    nu = np.zeros(reg.num_ineq)
    columns = np.vstack([reg.equalities.jacobian_at(x), reg.inequalities.jacobian_at(x)[active]]).T
    if columns.shape[1] == 0:
        return np.zeros(num_eq), nu
    lower = np.concatenate([np.full(num_eq, -np.inf), np.zeros(active.size)])
    upper = np.full(columns.shape[1], np.inf)
    w = lsq_linear(columns, reg.base.gradient(x), bounds=(lower, upper), method='bvls').x
    nu[active] = w[num_eq:]
    return w[:num_eq], nu


def _newton_polish(
    reg: RegularizedProblem, start: _Candidate, options: InnerSolverOptions
) -> Optional[_Candidate]:
    """Newton iterations on the KKT system of the candidate active set."""
    n, num_eq = reg.base.n, reg.equalities.output_dim
    active = start.active
    x, lam, nu = start.x.copy(), start.lam.copy(), start.nu.copy()

    def residual(x, lam, nu):
        return np.concatenate([
            _lagrangian_gradient(reg, x, lam, nu),
            reg.equalities.evaluate(x),
            reg.inequalities.evaluate(x)[active],
        ])

    F = residual(x, lam, nu)
    for _ in range(options.newton_steps):
        if np.linalg.norm(F) <= 1e-15 * (1.0 + np.linalg.norm(x)):
            break
        Jeq = reg.equalities.jacobian_at(x)
        Jact = reg.inequalities.jacobian_at(x)[active]
        H = _lagrangian_hessian(reg, x, lam, nu)
        size = n + num_eq + active.size
        K = np.zeros((size, size))
        K[:n, :n] = H
        K[:n, n:n + num_eq] = -Jeq.T
        K[:n, n + num_eq:] = -Jact.T
        K[n:n + num_eq, :n] = Jeq
        K[n + num_eq:, :n] = Jact
        step = scipy.linalg.lstsq(K, -F)[0]
        x = x + step[:n]
        lam = lam + step[n:n + num_eq]
        nu[active] = nu[active] + step[n + num_eq:]
        F_next = residual(x, lam, nu)
        if not np.all(np.isfinite(F_next)):
            return None
        converged = np.linalg.norm(step) <= 1e-15 * (1.0 + np.linalg.norm(x))
        F = F_next
        if converged:
            break

    if np.linalg.norm(x - start.x) > 1e-2 * (1.0 + np.linalg.norm(start.x)):
        return None
    return _Candidate(x, lam, nu, active)


def _kkt_residual(reg: RegularizedProblem, candidate: _Candidate) -> float:
    return float(np.linalg.norm(_lagrangian_gradient(reg, candidate.x, candidate.lam, candidate.nu)))


def _refine(reg: RegularizedProblem, x: np.ndarray, tol: Tolerances, options: InnerSolverOptions) -> _Candidate:
    c = reg.inequalities.evaluate(x)
    active = np.flatnonzero(c <= _candidate_band(reg, tol))
    lam, nu = _estimate_multipliers(reg, x, active)
    fallback = _Candidate(x, lam, nu, active)

    for _ in range(active.size + 1):
        lam, nu = _estimate_multipliers(reg, x, active)
        polished = _newton_polish(reg, _Candidate(x, lam, nu, active), options)
        if polished is None or reg.violation(polished.x) > tol.feasibility:
            logger.debug("Newton polish rejected at t=%g", reg.t)
            return fallback
        negative = polished.nu[active] < -tol.multiplier_zero
        if not negative.any():
            polished.nu[active] = np.maximum(polished.nu[active], 0.0)
            if _kkt_residual(reg, polished) <= max(_kkt_residual(reg, fallback), tol.stationarity_residual):
                return polished
            return fallback
        worst = active[int(np.argmin(polished.nu[active]))]
        active = active[active != worst]
    return fallback


def _slsqp(reg: RegularizedProblem, x0: np.ndarray, options: InnerSolverOptions):
    constraints = []
    if reg.equalities.output_dim:
        constraints.append({'type': 'eq', 'fun': reg.equalities.evaluate, 'jac': reg.equalities.jacobian_at})
    if reg.num_ineq:
        constraints.append({'type': 'ineq', 'fun': reg.inequalities.evaluate, 'jac': reg.inequalities.jacobian_at})
    result = minimize(
        reg.base.objective,
        x0,
        jac=reg.base.gradient,
        method='SLSQP',
        constraints=constraints,
        options={'maxiter': options.max_iter, 'ftol': 1e-14},
    )
    x = np.asarray(result.x, dtype=float)
    if not np.all(np.isfinite(x)):
        x = x0.copy()
    return x, int(result.get('nit', 0)), str(result.message), bool(result.success)


def _kkt_point(reg: RegularizedProblem, candidate: _Candidate, tol: Tolerances, iterations: int, message: str) -> InnerKktPoint:
    g_block, eta_block, le_block, ge_block = reg.blocks()
    residual = _kkt_residual(reg, candidate)
    feasible = reg.violation(candidate.x) <= tol.feasibility
    return InnerKktPoint(
        x=candidate.x,
        lam=candidate.lam,
        mu=candidate.nu[g_block],
        eta=candidate.nu[eta_block],
        eta_ge=candidate.nu[ge_block],
        eta_le=candidate.nu[le_block],
        kkt_residual=residual,
        t=reg.t,
        objective=reg.base.objective(candidate.x),
        F1_values=reg.base.F1.evaluate(candidate.x),
        F2_values=reg.base.F2.evaluate(candidate.x),
        converged=bool(feasible and residual <= tol.stationarity_residual),
        iterations=iterations,
        message=message,
    )


def _negative_curvature(
    reg: RegularizedProblem, candidate: _Candidate, anchor: np.ndarray, tol: Tolerances
) -> Optional[np.ndarray]:
    rows = np.vstack([
        reg.equalities.jacobian_at(candidate.x),
        reg.inequalities.jacobian_at(candidate.x)[candidate.active],
    ])
    Z = scipy.linalg.null_space(rows) if rows.shape[0] else np.eye(reg.base.n)
    if Z.shape[1] == 0:
        return None
    H = _lagrangian_hessian(reg, candidate.x, candidate.lam, candidate.nu)
    values, vectors = scipy.linalg.eigh(Z.T @ H @ Z)
    if values[0] >= -max(tol.eigen_singularity, 1e-10) * max(1.0, np.max(np.abs(values))):
        return None

    direction = Z @ vectors[:, 0]
    direction /= np.linalg.norm(direction)
    lean = float(direction @ (anchor - candidate.x))
    if abs(lean) > 1e-12:
        return direction if lean > 0 else -direction
    leading = direction[np.flatnonzero(np.abs(direction) > 1e-12)[0]]
    return direction if leading > 0 else -direction


def _solve_from(reg, x0, tol, options) -> Tuple[_Candidate, int, str]:
    x, iterations, message, _ = _slsqp(reg, x0, options)
    return _refine(reg, x, tol, options), iterations, message


def inner_kkt_solve(
    reg: RegularizedProblem,
    x0,
    tol: Optional[Tolerances] = None,
    options: Optional[InnerSolverOptions] = None,
    anchor=None,
) -> InnerKktPoint:
    """
    Find a KKT point of MPOC_t starting from ``x0``.

    A non-converged point (iteration cap, failed line search, residual above
    tolerance) is returned with ``converged=False`` and its best residual.
    """
    tol = conf.resolve_tolerances(tol)
    options = options or InnerSolverOptions.from_settings()
    x0 = as_point(x0, reg.base.n, 'x0')
    anchor = x0 if anchor is None else as_point(anchor, reg.base.n, 'anchor')

    candidate, iterations, message = _solve_from(reg, x0, tol, options)
    point = _kkt_point(reg, candidate, tol, iterations, message)

    escapes = 0
    while options.escape_saddles and point.converged and escapes < options.max_escapes:
        direction = _negative_curvature(reg, candidate, anchor, tol)
        if direction is None:
            break
        escapes += 1
        improved = False
        for scale in _ESCAPE_SCALES:
            step = scale * options.escape_step * max(1.0, float(np.linalg.norm(candidate.x)))
            trial, trial_iterations, trial_message = _solve_from(reg, candidate.x + step * direction, tol, options)
            trial_point = _kkt_point(reg, trial, tol, iterations + trial_iterations, trial_message)
            if trial_point.converged and trial_point.objective < point.objective - 1e-12 * (1.0 + abs(point.objective)):
                logger.debug(
                    "escaped regularized saddle at t=%g: f %.6g -> %.6g",
                    reg.t, point.objective, trial_point.objective,
                )
                candidate, point, iterations = trial, trial_point, iterations + trial_iterations
                improved = True
                break
        if not improved:
            break

    logger.debug(
        "inner solve t=%g: x=%s residual=%.3e converged=%s",
        reg.t, point.x, point.kkt_residual, point.converged,
    )
    return point


# ========== MULTIPLIER RECOVERY AND DRIVER ==========

def recover_t_multipliers(
    iterate: InnerKktPoint, pattern_at_limit: ActivePattern, problem: Optional[MpocProblem] = None
) -> MultiplierSet:
    """
    Limit T-multipliers from an inner KKT point.

    sigma1 = (eta_ge - eta_le) F2 on a01,  sigma2 = eta + (eta_ge - eta_le) F1 on a10,
    rho1 = (eta_ge - eta_le) F2 and rho2 = eta + (eta_ge - eta_le) F1 on a00.
    With ``problem`` the residual is measured at the iterate against the
    limit pattern; otherwise the inner KKT residual is reported.
    """
    pattern = pattern_at_limit
    spread = iterate.eta_ge - iterate.eta_le
    F1v, F2v = iterate.F1_values, iterate.F2_values

    def pick(values, indices):
        return values[np.asarray(indices, dtype=int)]

    stacked = np.concatenate([
        iterate.lam,
        pick(iterate.mu, pattern.J0),
        pick(spread * F2v, pattern.a01),
        pick(iterate.eta + spread * F1v, pattern.a10),
        pick(spread * F2v, pattern.a00),
        pick(iterate.eta + spread * F1v, pattern.a00),
    ])
    residual = iterate.kkt_residual
    if problem is not None:
        A = active_constraint_jacobian(problem, iterate.x, pattern)
        residual = float(np.linalg.norm(A.T @ stacked - problem.gradient(iterate.x)))
    return MultiplierSet.from_stacked(pattern, stacked, residual)


@dataclass(frozen=True, eq=False)
class RegularizationTrace:
    schedule: Tuple[float, ...]
    iterates: Tuple[InnerKktPoint, ...]
    limit_point: np.ndarray
    recovered: Optional[MultiplierSet]
    converged: bool
    certificate: Optional[StationarityCertificate] = None
    failure_stage: Optional[int] = None
    multiplier_gap: Optional[float] = None


def drive(
    problem: MpocProblem,
    x0,
    schedule: Optional[Schedule] = None,
    tol: Optional[Tolerances] = None,
    options: Optional[InnerSolverOptions] = None,
) -> RegularizationTrace:
    """Track KKT points of MPOC_t along a shrinking t schedule."""
    schedule = schedule or conf.default_schedule()
    tol = conf.resolve_tolerances(tol)
    options = options or InnerSolverOptions.from_settings()
    anchor = as_point(x0, problem.n, 'x0')

    ts: List[float] = []
    iterates: List[InnerKktPoint] = []
    x = anchor
    previous = None
    for stage in range(schedule.max_stages):
        t = schedule.t(stage)
        point = inner_kkt_solve(build_regularized(problem, t), x, tol, options, anchor=anchor)
        ts.append(t)
        iterates.append(point)
        if not point.converged:
            logger.warning(
                "inner solve failed at stage %d (t=%g): residual %.3e, %s",
                stage, t, point.kkt_residual, point.message,
            )
            return RegularizationTrace(
                tuple(ts), tuple(iterates), point.x, None, False, failure_stage=stage,
            )
        x = point.x
        logger.info("stage %d t=%g x=%s f=%.10g", stage, t, x, point.objective)
        settled = previous is not None and np.linalg.norm(x - previous) <= tol.stationarity_residual
        if (settled and t <= 10 * schedule.t_min) or t < schedule.t_min:
            break
        previous = x

    return _finish(problem, tuple(ts), tuple(iterates), tol)


def _finish(problem, ts, iterates, tol) -> RegularizationTrace:
    last = iterates[-1]
    t_final = ts[-1]
    limit_tol = tol.inflated(10 * t_final)
    try:
        certificate = t_stationarity_check(problem, last.x, limit_tol)
    except RejectedInput as exc:
        logger.warning("limit point rejected: %s", exc)
        return RegularizationTrace(ts, iterates, last.x, None, False, failure_stage=len(ts) - 1)

    recovered = recover_t_multipliers(last, certificate.pattern, problem)
    direct = solve_multipliers(problem, last.x, certificate.pattern, limit_tol)
    gap = float(np.max(np.abs(recovered.stacked() - direct.stacked()), initial=0.0))
    if certificate.licq.holds and gap > max(1e-4, 10 * t_final):
        logger.warning("recovered multipliers differ from the direct solve by %.3e", gap)
    if not certificate.licq.holds:
        logger.warning("LICQ fails at the limit %s", last.x)

    return RegularizationTrace(
        schedule=ts,
        iterates=iterates,
        limit_point=last.x,
        recovered=recovered,
        converged=certificate.is_t_stationary,
        certificate=certificate,
        multiplier_gap=gap,
    )


def random_starts(lower: Sequence[float], upper: Sequence[float], count: int, seed: int) -> np.ndarray:
    """``count`` uniform start points in the box, reproducible from ``seed``."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    rng = np.random.default_rng(seed)
    return rng.uniform(lower, upper, size=(int(count), lower.size))


def multi_start(
    problem: MpocProblem,
    starts,
    schedule: Optional[Schedule] = None,
    tol: Optional[Tolerances] = None,
    options: Optional[InnerSolverOptions] = None,
    workers: int = 1,
) -> List[RegularizationTrace]:
    """Run ``drive`` from every start; results keep the order of ``starts``."""
    schedule = schedule or conf.default_schedule()
    tol = conf.resolve_tolerances(tol)
    options = options or InnerSolverOptions.from_settings()
    starts = [np.asarray(s, dtype=float) for s in starts]
    if workers <= 1:
        return [drive(problem, s, schedule, tol, options) for s in starts]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(drive, problem, s, schedule, tol, options) for s in starts]
        return [future.result() for future in futures]
