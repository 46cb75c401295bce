"""
MPOC problem model.

An MPOC instance is a bundle of twice differentiable maps

    min f(x)  s.t.  h(x) = 0,  g(x) >= 0,
                    F1_m(x) * F2_m(x) = 0,  F2_m(x) >= 0   (m = 0..k-1)

Each map is a ``SmoothMap`` carrying its value, Jacobian and per-component
Hessian callbacks. Maps are built either from explicit callbacks, from the
combinators in this module (affine, coordinate, quadratic, stack, product,
pullback), or from a value-only callback through ``SmoothMap.from_values``,
which differentiates by central differences.

Design Decision: problems are frozen dataclasses
- All state produced while analysing a problem lives in result objects
- A problem can be shared across threads (multi-start, property suites)
- Callbacks must therefore be re-entrant

Indices are 0-based everywhere: pair m of the orthogonality constraints is
``(F1[m], F2[m])``.
"""

import logging
from dataclasses import dataclass, replace
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .conf import resolve_tolerances
from .exceptions import DerivativeCheckError, InconsistentPattern, RejectedInput

logger = logging.getLogger(__name__)

_EPS = np.finfo(float).eps
FD_STEP = _EPS ** (1.0 / 3.0)
FD_HESSIAN_STEP = _EPS ** 0.25

ValueCallback = Callable[[np.ndarray], np.ndarray]
JacobianCallback = Callable[[np.ndarray], np.ndarray]
HessianCallback = Callable[[np.ndarray, int], np.ndarray]


def as_point(x, n: int, name: str = 'x') -> np.ndarray:
    """Return ``x`` as a finite float vector of length ``n`` or raise RejectedInput."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != n:
        raise RejectedInput(f"{name} must be a vector of dimension {n}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise RejectedInput(f"{name} must be finite, got {arr.tolist()}")
    return arr


# ========== SMOOTH MAPS ==========

@dataclass(frozen=True, eq=False)
class SmoothMap:
    """
    A C2 map R^input_dim -> R^output_dim with derivative callbacks.

    Attributes
    ----------
    input_dim : int
        Dimension of the argument.
    output_dim : int
        Number of components; zero is allowed for empty constraint blocks.
    value : callable
        ``value(x)`` returns the ``output_dim`` component values.
    jacobian : callable
        ``jacobian(x)`` returns the ``(output_dim, input_dim)`` Jacobian.
    hessian_of_component : callable
        ``hessian_of_component(x, i)`` returns the symmetric Hessian of component i.
    vectorized : bool
        When true, ``value`` also accepts a ``(N, input_dim)`` batch and returns
        ``(N, output_dim)``. Used by the grid code in ``mpoc.landscape``.
    label : str
        Human-readable description used in logs and reports.
    """

    input_dim: int
    output_dim: int
    value: ValueCallback
    jacobian: JacobianCallback
    hessian_of_component: HessianCallback
    vectorized: bool = False
    label: str = ''

    def __post_init__(self):
        if int(self.input_dim) < 1:
            raise RejectedInput(f"input_dim must be positive, got {self.input_dim}")
        if int(self.output_dim) < 0:
            raise RejectedInput(f"output_dim must be nonnegative, got {self.output_dim}")

    def evaluate(self, x) -> np.ndarray:
        return np.asarray(self.value(x), dtype=float).reshape(self.output_dim)

    def jacobian_at(self, x) -> np.ndarray:
        return np.asarray(self.jacobian(x), dtype=float).reshape(self.output_dim, self.input_dim)

    def hessian_at(self, x, component: int) -> np.ndarray:
        if not 0 <= component < self.output_dim:
            raise RejectedInput(
                f"component {component} out of range for a map with {self.output_dim} outputs"
            )
        return np.asarray(self.hessian_of_component(x, component), dtype=float).reshape(
            self.input_dim, self.input_dim
        )

    def evaluate_batch(self, points) -> np.ndarray:
        """Evaluate at every row of a ``(N, input_dim)`` array."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.input_dim:
            raise RejectedInput(
                f"batch must have {self.input_dim} columns, got shape {points.shape}"
            )
        count = points.shape[0]
        if self.output_dim == 0:
            return np.zeros((count, 0))
        if self.vectorized:
            return np.asarray(self.value(points), dtype=float).reshape(count, self.output_dim)
        return np.array([self.evaluate(p) for p in points]).reshape(count, self.output_dim)

    @classmethod
    def from_values(
        cls, value: ValueCallback, input_dim: int, output_dim: int, label: str = ''
    ) -> 'SmoothMap':
        """
        Wrap a value-only callback, differentiating by central differences.

        Jacobian steps are eps^(1/3) * (1 + |x_i|); Hessians use second
        differences of the values with eps^(1/4) * (1 + |x_i|).
        """

        def jacobian(x):
            return fd_jacobian(value, np.asarray(x, dtype=float), output_dim)

        def hessian(x, component):
            return _fd_value_hessian(value, np.asarray(x, dtype=float), component, output_dim)

        return cls(input_dim, output_dim, value, jacobian, hessian, label=label or 'finite-difference map')


def _checked(values, m: int, coordinate: int) -> np.ndarray:
    values = np.asarray(values, dtype=float).reshape(m)
    if not np.all(np.isfinite(values)):
        raise DerivativeCheckError(
            f"non-finite evaluation while differencing along coordinate {coordinate}",
            coordinate=coordinate,
        )
    return values


def fd_jacobian(value: ValueCallback, x: np.ndarray, output_dim: int) -> np.ndarray:
    """Central-difference Jacobian of ``value`` at ``x``."""
    n = x.size
    jac = np.empty((output_dim, n))
    for i in range(n):
        step = FD_STEP * (1.0 + abs(x[i]))
        e = np.zeros(n)
        e[i] = step
        forward = _checked(value(x + e), output_dim, i)
        backward = _checked(value(x - e), output_dim, i)
        jac[:, i] = (forward - backward) / (2.0 * step)
    return jac


def _fd_value_hessian(value: ValueCallback, x: np.ndarray, component: int, output_dim: int) -> np.ndarray:
    n = x.size
    steps = FD_HESSIAN_STEP * (1.0 + np.abs(x))
    hess = np.empty((n, n))

    def at(point, coordinate):
        return _checked(value(point), output_dim, coordinate)[component]

    for a in range(n):
        ea = np.zeros(n)
        ea[a] = steps[a]
        for b in range(a, n):
            eb = np.zeros(n)
            eb[b] = steps[b]
            second = (
                at(x + ea + eb, b) - at(x + ea - eb, b) - at(x - ea + eb, b) + at(x - ea - eb, b)
            ) / (4.0 * steps[a] * steps[b])
            hess[a, b] = hess[b, a] = second
    return hess


def _fd_jacobian_hessian(smooth_map: SmoothMap, x: np.ndarray) -> np.ndarray:
    """Hessians of every component by central differences of the supplied Jacobian."""
    m, n = smooth_map.output_dim, smooth_map.input_dim
    hessians = np.empty((m, n, n))
    for i in range(n):
        step = FD_STEP * (1.0 + abs(x[i]))
        e = np.zeros(n)
        e[i] = step
        forward = smooth_map.jacobian_at(x + e)
        backward = smooth_map.jacobian_at(x - e)
        if not (np.all(np.isfinite(forward)) and np.all(np.isfinite(backward))):
            raise DerivativeCheckError(
                f"non-finite Jacobian while differencing along coordinate {i}", coordinate=i
            )
        hessians[:, :, i] = (forward - backward) / (2.0 * step)
    return hessians


def _relative_error(supplied: np.ndarray, reference: np.ndarray) -> float:
    if supplied.size == 0:
        return 0.0
    scale = max(1.0, float(np.max(np.abs(reference))))
    return float(np.max(np.abs(supplied - reference))) / scale


def fd_derivative_check(smooth_map: SmoothMap, x) -> float:
    """
    Compare supplied derivatives against central differences.

    Returns the largest relative error over the Jacobian and all component
    Hessians, each block measured as ``max|A - A_ref| / max(1, max|A_ref|)``.
    The Jacobian reference differences ``value``; the Hessian reference
    differences the supplied Jacobian.
    """
    x = as_point(x, smooth_map.input_dim)
    if smooth_map.output_dim == 0:
        return 0.0

    center = smooth_map.evaluate(x)
    if not np.all(np.isfinite(center)):
        raise DerivativeCheckError("non-finite value at the probe point", coordinate=-1)

    jac_ref = fd_jacobian(smooth_map.value, x, smooth_map.output_dim)
    error = _relative_error(smooth_map.jacobian_at(x), jac_ref)

    hess_ref = _fd_jacobian_hessian(smooth_map, x)
    for component in range(smooth_map.output_dim):
        supplied = smooth_map.hessian_at(x, component)
        error = max(error, _relative_error(supplied, hess_ref[component]))

    logger.debug("derivative check for %s at %s: %.3e", smooth_map.label or 'map', x, error)
    return error


# ========== MAP COMBINATORS ==========

def _zero_hessian(n: int) -> HessianCallback:
    def hessian(x, component):
        return np.zeros((n, n))

    return hessian


def zero_map(n: int) -> SmoothMap:
    """Map with no components, used for absent constraint blocks."""
    return SmoothMap(
        n,
        0,
        value=lambda x: np.zeros(np.shape(x)[:-1] + (0,)),
        jacobian=lambda x: np.zeros((0, n)),
        hessian_of_component=_zero_hessian(n),
        vectorized=True,
        label='empty',
    )


def affine_map(A, b=None, *, n: Optional[int] = None, label: str = '') -> SmoothMap:
    """x -> A x + b. Pass ``n`` when A has no rows."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        if n is None:
            raise RejectedInput("affine_map with no rows needs the input dimension n")
        A = np.zeros((0, n))
    A = np.atleast_2d(A)
    m, cols = A.shape
    if n is not None and cols != n:
        raise RejectedInput(f"matrix has {cols} columns, expected {n}")
    b = np.zeros(m) if b is None else np.asarray(b, dtype=float).reshape(m)
    return SmoothMap(
        cols,
        m,
        value=lambda x: np.asarray(x, dtype=float) @ A.T + b,
        jacobian=lambda x: A.copy(),
        hessian_of_component=_zero_hessian(cols),
        vectorized=True,
        label=label or f'affine {m}x{cols}',
    )


def coordinate_map(n: int, indices: Sequence[int], label: str = '') -> SmoothMap:
    """x -> (x[i] for i in indices)."""
    indices = [int(i) for i in indices]
    for i in indices:
        if not 0 <= i < n:
            raise RejectedInput(f"coordinate index {i} out of range for dimension {n}")
    rows = np.eye(n)[indices] if indices else np.zeros((0, n))
    return affine_map(rows, n=n, label=label or f'x{indices}')


def quadratic_function(Q, c=None, r: float = 0.0, label: str = '') -> SmoothMap:
    """f(x) = 1/2 x'Qx + c'x + r with Q symmetrised."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if Q.shape[0] != Q.shape[1]:
        raise RejectedInput(f"Q must be square, got shape {Q.shape}")
    Q = 0.5 * (Q + Q.T)
    n = Q.shape[0]
    c = np.zeros(n) if c is None else np.asarray(c, dtype=float).reshape(n)
    r = float(r)

    def value(x):
        x = np.asarray(x, dtype=float)
        quad = 0.5 * np.einsum('...i,ij,...j->...', x, Q, x)
        return (quad + x @ c + r)[..., None]

    return SmoothMap(
        n,
        1,
        value=value,
        jacobian=lambda x: (Q @ np.asarray(x, dtype=float) + c)[None, :],
        hessian_of_component=lambda x, component: Q.copy(),
        vectorized=True,
        label=label or 'quadratic',
    )


def stack_maps(*maps: SmoothMap, label: str = '') -> SmoothMap:
    """Concatenate the components of maps sharing an input dimension."""
    if not maps:
        raise RejectedInput("stack_maps needs at least one map")
    n = maps[0].input_dim
    if any(m.input_dim != n for m in maps):
        raise RejectedInput("stacked maps must share input_dim")
    offsets = np.cumsum([0] + [m.output_dim for m in maps])

    def value(x):
        x = np.asarray(x, dtype=float)
        parts = [
            np.asarray(m.value(x), dtype=float).reshape(x.shape[:-1] + (m.output_dim,))
            for m in maps
        ]
        return np.concatenate(parts, axis=-1)

    def jacobian(x):
        return np.vstack([m.jacobian_at(x) for m in maps])

    def hessian(x, component):
        block = int(np.searchsorted(offsets, component, side='right')) - 1
        return maps[block].hessian_at(x, component - int(offsets[block]))

    return SmoothMap(
        n,
        int(offsets[-1]),
        value,
        jacobian,
        hessian,
        vectorized=all(m.vectorized for m in maps),
        label=label or ' ; '.join(m.label for m in maps),
    )


def product_map(left: SmoothMap, right: SmoothMap, label: str = '') -> SmoothMap:
    """
    Componentwise product ``left_i * right_i`` with product-rule derivatives.

    D(ab) = b Da + a Db
    D2(ab) = b D2a + a D2b + Da' Db + Db' Da
    """
    if left.input_dim != right.input_dim or left.output_dim != right.output_dim:
        raise RejectedInput("product_map needs maps of identical shape")
    n, k = left.input_dim, left.output_dim

    def value(x):
        x = np.asarray(x, dtype=float)
        shape = x.shape[:-1] + (k,)
        return np.asarray(left.value(x), dtype=float).reshape(shape) * np.asarray(
            right.value(x), dtype=float
        ).reshape(shape)

    def jacobian(x):
        a, b = left.evaluate(x), right.evaluate(x)
        return b[:, None] * left.jacobian_at(x) + a[:, None] * right.jacobian_at(x)

    def hessian(x, component):
        a = left.evaluate(x)[component]
        b = right.evaluate(x)[component]
        da = left.jacobian_at(x)[component]
        db = right.jacobian_at(x)[component]
        return (
            b * left.hessian_at(x, component)
            + a * right.hessian_at(x, component)
            + np.outer(da, db)
            + np.outer(db, da)
        )

    return SmoothMap(
        n,
        k,
        value,
        jacobian,
        hessian,
        vectorized=left.vectorized and right.vectorized,
        label=label or f'({left.label})*({right.label})',
    )


def affine_transform(base: SmoothMap, scale=1.0, offset=0.0, label: str = '') -> SmoothMap:
    """x -> scale * base(x) + offset, componentwise."""
    m = base.output_dim
    scale = np.broadcast_to(np.asarray(scale, dtype=float), (m,)).copy()
    offset = np.broadcast_to(np.asarray(offset, dtype=float), (m,)).copy()

    def value(x):
        x = np.asarray(x, dtype=float)
        return scale * np.asarray(base.value(x), dtype=float).reshape(x.shape[:-1] + (m,)) + offset

    return SmoothMap(
        base.input_dim,
        m,
        value,
        jacobian=lambda x: scale[:, None] * base.jacobian_at(x),
        hessian_of_component=lambda x, component: scale[component] * base.hessian_at(x, component),
        vectorized=base.vectorized,
        label=label or f'affine({base.label})',
    )


def pullback(base: SmoothMap, embedding) -> SmoothMap:
    """
    Compose ``base`` with a linear map: z -> base(P z).

    ``embedding`` is the ``(base.input_dim, n_new)`` matrix P.
    """
    P = np.atleast_2d(np.asarray(embedding, dtype=float))
    if P.shape[0] != base.input_dim:
        raise RejectedInput(f"embedding must have {base.input_dim} rows, got {P.shape[0]}")
    n_new = P.shape[1]

    def value(z):
        return base.value(np.asarray(z, dtype=float) @ P.T)

    return SmoothMap(
        n_new,
        base.output_dim,
        value,
        jacobian=lambda z: base.jacobian_at(P @ np.asarray(z, dtype=float)) @ P,
        hessian_of_component=lambda z, component: P.T
        @ base.hessian_at(P @ np.asarray(z, dtype=float), component)
        @ P,
        vectorized=base.vectorized,
        label=base.label,
    )


# ========== PROBLEM ==========

@dataclass(frozen=True, eq=False)
class MpocProblem:
    """An MPOC instance; see the module docstring for the constraint layout."""

    n: int
    f: SmoothMap
    h: SmoothMap
    g: SmoothMap
    F1: SmoothMap
    F2: SmoothMap
    name: str = ''

    def __post_init__(self):
        if int(self.n) < 1:
            raise RejectedInput(f"dimension n must be positive, got {self.n}")
        for label, smooth_map in self.maps().items():
            if smooth_map.input_dim != self.n:
                raise RejectedInput(
                    f"map {label} has input_dim {smooth_map.input_dim}, expected {self.n}"
                )
        if self.f.output_dim != 1:
            raise RejectedInput(f"objective must be scalar, got output_dim {self.f.output_dim}")
        if self.F1.output_dim != self.F2.output_dim:
            raise RejectedInput(
                f"F1 and F2 must have the same number of components "
                f"({self.F1.output_dim} != {self.F2.output_dim})"
            )

    @classmethod
    def build(
        cls,
        n: int,
        f: SmoothMap,
        h: Optional[SmoothMap] = None,
        g: Optional[SmoothMap] = None,
        F1: Optional[SmoothMap] = None,
        F2: Optional[SmoothMap] = None,
        name: str = '',
    ) -> 'MpocProblem':
        """Construct a problem, filling absent blocks with empty maps."""
        return cls(
            n,
            f,
            h if h is not None else zero_map(n),
            g if g is not None else zero_map(n),
            F1 if F1 is not None else zero_map(n),
            F2 if F2 is not None else zero_map(n),
            name=name,
        )

    @property
    def num_eq(self) -> int:
        return self.h.output_dim

    @property
    def num_ineq(self) -> int:
        return self.g.output_dim

    @property
    def k(self) -> int:
        return self.F1.output_dim

    def maps(self) -> Dict[str, SmoothMap]:
        return {'f': self.f, 'h': self.h, 'g': self.g, 'F1': self.F1, 'F2': self.F2}

    def objective(self, x) -> float:
        return float(self.f.evaluate(x)[0])

    def gradient(self, x) -> np.ndarray:
        return self.f.jacobian_at(x)[0]

    def objective_hessian(self, x) -> np.ndarray:
        return self.f.hessian_at(x, 0)

    def __str__(self) -> str:
        return (
            f"{self.name or 'MPOC'} (n={self.n}, |I|={self.num_eq}, "
            f"|J|={self.num_ineq}, k={self.k})"
        )


@dataclass(frozen=True)
class Tolerances:
    """Absolute thresholds used by every check in the toolkit."""

    activity: float = 1e-8
    stationarity_residual: float = 1e-8
    eigen_singularity: float = 1e-8
    multiplier_zero: float = 1e-7
    feasibility: float = 1e-8

    def __post_init__(self):
        for name in ('activity', 'stationarity_residual', 'eigen_singularity',
                     'multiplier_zero', 'feasibility'):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise RejectedInput(f"tolerance {name} must be a finite nonnegative real, got {value}")

    def inflated(self, floor: float) -> 'Tolerances':
        """Raise the activity and feasibility thresholds to at least ``floor``."""
        return replace(
            self,
            activity=max(self.activity, floor),
            feasibility=max(self.feasibility, floor),
        )


# ========== FEASIBILITY AND ACTIVE SETS ==========

@dataclass(frozen=True)
class FeasibilityVerdict:
    feasible: bool
    max_violation: float
    worst: str = ''


def feasibility_check(problem: MpocProblem, x, tol: Optional[Tolerances] = None) -> FeasibilityVerdict:
    """Largest violation over |h|, max(0,-g), |F1*F2| and max(0,-F2)."""
    tol = resolve_tolerances(tol)
    x = as_point(x, problem.n)
    F1v = problem.F1.evaluate(x)
    F2v = problem.F2.evaluate(x)
    blocks = (
        ('h', np.abs(problem.h.evaluate(x))),
        ('g', np.maximum(0.0, -problem.g.evaluate(x))),
        ('F1*F2', np.abs(F1v * F2v)),
        ('F2', np.maximum(0.0, -F2v)),
    )
    worst, violation = '', 0.0
    for label, values in blocks:
        if values.size and float(values.max()) > violation:
            violation = float(values.max())
            worst = f"{label}[{int(values.argmax())}]"
    return FeasibilityVerdict(violation <= tol.feasibility, violation, worst)


@dataclass(frozen=True)
class ActivePattern:
    """
    Active index sets at a feasible point and the derived counts.

    s = |I| + |a01| + |a10|, q = s + |J0|, p = n - q - 2|a00|. ``p`` is
    negative when more constraints are active than the dimension allows;
    LICQ then fails downstream.
    """

    n: int
    num_eq: int
    J0: Tuple[int, ...]
    a01: Tuple[int, ...]
    a10: Tuple[int, ...]
    a00: Tuple[int, ...]
    s: int
    q: int
    p: int

    def __post_init__(self):
        groups = (set(self.a01), set(self.a10), set(self.a00))
        if sum(len(g) for g in groups) != len(set().union(*groups)):
            raise InconsistentPattern("orthogonality index classes overlap")
        if self.s != self.num_eq + len(self.a01) + len(self.a10):
            raise InconsistentPattern(f"s={self.s} does not match the index sets")
        if self.q != self.s + len(self.J0) or self.p != self.n - self.q - 2 * len(self.a00):
            raise InconsistentPattern("q or p does not match the index sets")

    @classmethod
    def build(cls, n: int, num_eq: int, J0=(), a01=(), a10=(), a00=()) -> 'ActivePattern':
        J0, a01, a10, a00 = (tuple(sorted(int(i) for i in group)) for group in (J0, a01, a10, a00))
        s = num_eq + len(a01) + len(a10)
        q = s + len(J0)
        return cls(n, num_eq, J0, a01, a10, a00, s, q, n - q - 2 * len(a00))

    @property
    def active_gradient_count(self) -> int:
        return self.num_eq + len(self.J0) + len(self.a01) + len(self.a10) + 2 * len(self.a00)


def active_sets(problem: MpocProblem, x, tol: Optional[Tolerances] = None) -> ActivePattern:
    """
    Classify constraints at a feasible point.

    A pair with both |F1| and |F2| at or below ``tol.activity`` is biactive;
    ties at exactly the threshold therefore count as biactive.
    """
    tol = resolve_tolerances(tol)
    x = as_point(x, problem.n)
    verdict = feasibility_check(problem, x, tol)
    if not verdict.feasible:
        raise RejectedInput(
            f"point is infeasible: violation {verdict.max_violation:.3e} at {verdict.worst}"
        )

    J0 = np.flatnonzero(np.abs(problem.g.evaluate(x)) <= tol.activity)
    F1v = problem.F1.evaluate(x)
    F2v = problem.F2.evaluate(x)
    zero1 = np.abs(F1v) <= tol.activity
    zero2 = np.abs(F2v) <= tol.activity
    a00 = zero1 & zero2
    a01 = zero1 & (F2v > tol.activity)
    a10 = ~zero1 & zero2

    unclassified = np.flatnonzero(~(a00 | a01 | a10))
    if unclassified.size:
        m = int(unclassified[0])
        raise InconsistentPattern(
            f"pair {m} is inactive on both sides (F1={F1v[m]:.3e}, F2={F2v[m]:.3e}) "
            f"at a feasible point; activity tolerance {tol.activity:g} is too tight",
            pair=m,
        )

    return ActivePattern.build(
        problem.n,
        problem.num_eq,
        J0=J0,
        a01=np.flatnonzero(a01),
        a10=np.flatnonzero(a10),
        a00=np.flatnonzero(a00),
    )
