"""
Nondegeneracy and T-index of T-stationary points.

Checks, at a T-stationary point with multipliers from ``solve_multipliers``:

    ND1  LICQ holds
    ND2  every active inequality multiplier is strictly positive
    ND3  every biactive pair has rho1 != 0 and rho2 < 0
    ND4  the Lagrangian Hessian restricted to the tangent space is nonsingular

QI counts negative restricted eigenvalues, BI counts biactive pairs with
rho2 < 0 and TI = QI + BI. A nondegenerate point is a local minimizer iff
TI = 0. Degenerate points carry no TI.

The Lagrangian subtracts every active term with the same sign:

    L = f - sum lam h - sum mu g_J0 - sum sigma1 F1_a01 - sum sigma2 F2_a10
          - sum (rho1 F1_a00 + rho2 F2_a00)
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from .conf import resolve_tolerances
from .problems import ActivePattern, MpocProblem, Tolerances, as_point
from .stationarity import (
    MultiplierSet,
    StationarityCertificate,
    active_constraint_jacobian,
    t_stationarity_check,
)

logger = logging.getLogger(__name__)


class Classification(str, Enum):
    NONDEGENERATE_LOCAL_MIN = 'NONDEGENERATE_LOCAL_MIN'
    NONDEGENERATE_SADDLE = 'NONDEGENERATE_SADDLE'
    DEGENERATE = 'DEGENERATE'


@dataclass(frozen=True, eq=False)
class TangentBasis:
    """Orthonormal columns spanning the null space of the active Jacobian."""

    basis: np.ndarray
    p_eff: int


@dataclass(frozen=True)
class NondegeneracyReport:
    nd1_licq: bool
    nd2_strict_complementarity: bool
    nd3_biactive_multipliers: bool
    nd4_hessian_nonsingular: bool
    restricted_hessian_eigenvalues: Tuple[float, ...]
    QI: int
    BI: int
    TI: Optional[int]
    classification: Classification

    @property
    def nondegenerate(self) -> bool:
        return self.classification is not Classification.DEGENERATE

    def failed_conditions(self) -> Tuple[str, ...]:
        flags = (
            ('ND1', self.nd1_licq),
            ('ND2', self.nd2_strict_complementarity),
            ('ND3', self.nd3_biactive_multipliers),
            ('ND4', self.nd4_hessian_nonsingular),
        )
        return tuple(name for name, holds in flags if not holds)


def lagrangian_hessian(problem: MpocProblem, x, multipliers: MultiplierSet) -> np.ndarray:
    x = as_point(x, problem.n)
    pattern = multipliers.pattern
    H = problem.objective_hessian(x).copy()
    terms = (
        (problem.h, range(problem.num_eq), multipliers.lam),
        (problem.g, pattern.J0, multipliers.mu),
        (problem.F1, pattern.a01, multipliers.sigma1),
        (problem.F2, pattern.a10, multipliers.sigma2),
        (problem.F1, pattern.a00, multipliers.rho1),
        (problem.F2, pattern.a00, multipliers.rho2),
    )
    for smooth_map, indices, weights in terms:
        for index, weight in zip(indices, weights):
            if weight != 0.0:
                H -= weight * smooth_map.hessian_at(x, index)
    return 0.5 * (H + H.T)


def tangent_basis(problem: MpocProblem, x, pattern: ActivePattern) -> TangentBasis:
    A = active_constraint_jacobian(problem, x, pattern)
    if A.shape[0] == 0:
        return TangentBasis(np.eye(problem.n), problem.n)
    basis = scipy.linalg.null_space(A)
    return TangentBasis(basis, basis.shape[1])


def restricted_hessian(H: np.ndarray, B: TangentBasis) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    if B.p_eff == 0:
        return np.zeros((0, 0))
    if H.shape != (B.basis.shape[0], B.basis.shape[0]):
        raise ValueError(f"Hessian shape {H.shape} does not match basis rows {B.basis.shape[0]}")
    return B.basis.T @ H @ B.basis


def symmetric_eigenvalues(M: np.ndarray) -> np.ndarray:
    if M.size == 0:
        return np.zeros(0)
    return scipy.linalg.eigh(0.5 * (M + M.T), eigvals_only=True)


def nondegeneracy_report(
    problem: MpocProblem, certificate: StationarityCertificate, tol: Tolerances
) -> NondegeneracyReport:
    """ND1-ND4 and the indices for a T-stationary certificate."""
    x = certificate.point
    multipliers = certificate.multipliers
    H = lagrangian_hessian(problem, x, multipliers)
    B = tangent_basis(problem, x, certificate.pattern)
    eigenvalues = symmetric_eigenvalues(restricted_hessian(H, B))

    nd1 = certificate.licq.holds
    nd2 = bool(np.all(multipliers.mu > tol.multiplier_zero))
    nd3 = bool(
        np.all(np.abs(multipliers.rho1) > tol.multiplier_zero)
        and np.all(multipliers.rho2 < -tol.multiplier_zero)
    )
    nd4 = bool(np.all(np.abs(eigenvalues) > tol.eigen_singularity))
    QI = int(np.sum(eigenvalues < -tol.eigen_singularity))
    BI = int(np.sum(multipliers.rho2 < -tol.multiplier_zero))

    if nd1 and nd2 and nd3 and nd4:
        TI = QI + BI
        classification = (
            Classification.NONDEGENERATE_LOCAL_MIN if TI == 0 else Classification.NONDEGENERATE_SADDLE
        )
    else:
        TI = None
        classification = Classification.DEGENERATE

    return NondegeneracyReport(
        nd1_licq=nd1,
        nd2_strict_complementarity=nd2,
        nd3_biactive_multipliers=nd3,
        nd4_hessian_nonsingular=nd4,
        restricted_hessian_eigenvalues=tuple(float(v) for v in eigenvalues),
        QI=QI,
        BI=BI,
        TI=TI,
        classification=classification,
    )


def classify_point(
    problem: MpocProblem, x, tol: Optional[Tolerances] = None
) -> Tuple[StationarityCertificate, Optional[NondegeneracyReport]]:
    """
    Certify and classify a point.

    Returns ``(certificate, None)`` when the point is not T-stationary.
    """
    tol = resolve_tolerances(tol)
    certificate = t_stationarity_check(problem, x, tol)
    if not certificate.is_t_stationary:
        logger.debug(
            "%s is not T-stationary: %s",
            certificate.point, [c.value for c in certificate.violated_conditions],
        )
        return certificate, None
    report = nondegeneracy_report(problem, certificate, tol)
    logger.debug("%s classified as %s", certificate.point, report.classification.value)
    return certificate, report
