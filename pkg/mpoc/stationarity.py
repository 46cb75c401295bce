"""
LICQ and T-stationarity certification.

At a feasible point the active gradients are stacked in a fixed order

    Dh_i (all i), Dg_j (j in J0), DF1_m (m in a01), DF2_m (m in a10),
    DF1_m (m in a00), DF2_m (m in a00)

and the multipliers solve ``min ||A' w - Df(x)'||`` in the minimum-norm
least-squares sense. Under LICQ the solution is the unique decomposition; when
LICQ fails the minimum-norm solution is still reported but flagged as not
unique and no optimality claim is attached to it.

Sign conventions: a multiplier counts as zero when ``|v| <= multiplier_zero``
and as negative when ``v < -multiplier_zero``.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from .conf import resolve_tolerances
from .problems import ActivePattern, MpocProblem, Tolerances, active_sets, as_point

logger = logging.getLogger(__name__)


class Condition(str, Enum):
    GRAD_RESIDUAL = 'GRAD_RESIDUAL'
    MU_SIGN = 'MU_SIGN'
    RHO_SIGN = 'RHO_SIGN'


@dataclass(frozen=True)
class LicqReport:
    holds: bool
    min_singular_value: float
    active_gradient_count: int


@dataclass(frozen=True, eq=False)
class MultiplierSet:
    """
    Multipliers of the gradient decomposition, aligned with ``pattern``.

    ``mu[j]`` belongs to ``pattern.J0[j]``, ``sigma1`` to ``a01``, ``sigma2`` to
    ``a10`` and ``rho1``/``rho2`` to ``a00``. ``unique`` is false when the
    active gradients are linearly dependent.
    """

    pattern: ActivePattern = field(metadata={'json': None})
    lam: np.ndarray = field(metadata={'json': 'lambda'})
    mu: np.ndarray
    sigma1: np.ndarray
    sigma2: np.ndarray
    rho1: np.ndarray
    rho2: np.ndarray
    residual_norm: float
    unique: bool = True

    @classmethod
    def from_stacked(
        cls, pattern: ActivePattern, w, residual_norm: float, unique: bool = True
    ) -> 'MultiplierSet':
        w = np.asarray(w, dtype=float)
        sizes = [
            pattern.num_eq,
            len(pattern.J0),
            len(pattern.a01),
            len(pattern.a10),
            len(pattern.a00),
            len(pattern.a00),
        ]
        if w.size != sum(sizes):
            raise ValueError(f"expected {sum(sizes)} stacked multipliers, got {w.size}")
        parts = np.split(w, np.cumsum(sizes)[:-1])
        return cls(pattern, *parts, residual_norm=float(residual_norm), unique=unique)

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.lam, self.mu, self.sigma1, self.sigma2, self.rho1, self.rho2])


@dataclass(frozen=True, eq=False)
class StationarityCertificate:
    point: np.ndarray
    pattern: ActivePattern
    multipliers: MultiplierSet
    licq: LicqReport
    is_t_stationary: bool
    violated_conditions: Tuple[Condition, ...] = ()


def _rows(matrix: np.ndarray, indices) -> np.ndarray:
    return matrix[np.asarray(indices, dtype=int)]


def active_constraint_jacobian(problem: MpocProblem, x, pattern: ActivePattern) -> np.ndarray:
    """Stacked active gradients as rows, in multiplier stack order."""
    x = as_point(x, problem.n)
    jac_F1 = problem.F1.jacobian_at(x)
    jac_F2 = problem.F2.jacobian_at(x)
    return np.vstack([
        problem.h.jacobian_at(x),
        _rows(problem.g.jacobian_at(x), pattern.J0),
        _rows(jac_F1, pattern.a01),
        _rows(jac_F2, pattern.a10),
        _rows(jac_F1, pattern.a00),
        _rows(jac_F2, pattern.a00),
    ])


def licq_report_for(A: np.ndarray, n: int, tol: Tolerances) -> LicqReport:
    count = A.shape[0]
    if count == 0:
        return LicqReport(True, float('inf'), 0)
    if count > n:
        return LicqReport(False, 0.0, count)
    smallest = float(scipy.linalg.svd(A, compute_uv=False)[-1])
    return LicqReport(smallest > tol.eigen_singularity, smallest, count)


def licq_check(
    problem: MpocProblem, x, pattern: ActivePattern, tol: Optional[Tolerances] = None
) -> LicqReport:
    """Linear independence of the active gradients via the smallest singular value."""
    tol = resolve_tolerances(tol)
    return licq_report_for(active_constraint_jacobian(problem, x, pattern), problem.n, tol)


def solve_multipliers(
    problem: MpocProblem, x, pattern: ActivePattern, tol: Optional[Tolerances] = None
) -> MultiplierSet:
    tol = resolve_tolerances(tol)
    x = as_point(x, problem.n)
    gradient = problem.gradient(x)
    A = active_constraint_jacobian(problem, x, pattern)
    if A.shape[0] == 0:
        return MultiplierSet.from_stacked(pattern, np.zeros(0), np.linalg.norm(gradient))

    w = scipy.linalg.lstsq(A.T, gradient, lapack_driver='gelsd')[0]
    residual = float(np.linalg.norm(A.T @ w - gradient))
    licq = licq_report_for(A, problem.n, tol)
    return MultiplierSet.from_stacked(pattern, w, residual, unique=licq.holds)


def sign_violations(multipliers: MultiplierSet, tol: Tolerances) -> Tuple[Condition, ...]:
    violated = []
    if multipliers.residual_norm > tol.stationarity_residual:
        violated.append(Condition.GRAD_RESIDUAL)
    if np.any(multipliers.mu < -tol.multiplier_zero):
        violated.append(Condition.MU_SIGN)
    rho_nonzero = np.abs(multipliers.rho1) > tol.multiplier_zero
    if np.any(rho_nonzero & (multipliers.rho2 > tol.multiplier_zero)):
        violated.append(Condition.RHO_SIGN)
    return tuple(violated)


def t_stationarity_check(problem: MpocProblem, x, tol: Optional[Tolerances] = None) -> StationarityCertificate:
    """
    Certify T-stationarity at a feasible point.

    The point is T-stationary when the gradient residual is within tolerance,
    every mu is nonnegative, and every biactive pair has rho1 = 0 or rho2 <= 0.
    """
    tol = resolve_tolerances(tol)
    x = as_point(x, problem.n)
    pattern = active_sets(problem, x, tol)
    A = active_constraint_jacobian(problem, x, pattern)
    licq = licq_report_for(A, problem.n, tol)
    multipliers = solve_multipliers(problem, x, pattern, tol)
    if not licq.holds:
        logger.info(
            "LICQ fails at %s (%d active gradients, smallest singular value %.3e); "
            "multipliers are minimum-norm",
            x, licq.active_gradient_count, licq.min_singular_value,
        )

    violated = sign_violations(multipliers, tol)
    return StationarityCertificate(
        point=x,
        pattern=pattern,
        multipliers=multipliers,
        licq=licq,
        is_t_stationary=not violated,
        violated_conditions=violated,
    )
