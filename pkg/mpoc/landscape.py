"""
Lower level sets of planar MPOC instances on a grid.

The feasible set is thickened to a band of width ``delta`` (the orthogonality
set has measure zero, so exact grid membership is empty). A grid point is in
the band when

    |h| <= delta,  g >= -delta,  F2 >= -delta,
    min(|F2|, |F1| + max(0, -F2)) <= delta      (distance of (F1, F2) to T)

Connected components of ``band & (f <= a)`` use 8-neighbour adjacency. The
count only sees topology inside the box: the caller is responsible for
choosing a box that contains every lower level set of interest.
"""

import csv
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, TextIO, Tuple

import numpy as np
from django.template.loader import render_to_string
from scipy import ndimage

from .conf import resolve_tolerances
from .exceptions import RejectedInput
from .problems import MpocProblem, Tolerances, as_point

logger = logging.getLogger(__name__)

EIGHT_NEIGHBOURS = np.ones((3, 3), dtype=int)

COMPACTNESS_NOTE = (
    "component counts cover the box only; compactness of the lower level sets "
    "inside the box is assumed, not verified"
)


@dataclass(frozen=True)
class GridSpec:
    lower: Tuple[float, float]
    upper: Tuple[float, float]
    resolution: int = 801
    membership_thickness: Optional[float] = None

    def __post_init__(self):
        if len(self.lower) != 2 or len(self.upper) != 2:
            raise RejectedInput("grid corners must be 2-vectors")
        if int(self.resolution) < 3:
            raise RejectedInput(f"resolution must be at least 3, got {self.resolution}")
        if not all(lo < hi for lo, hi in zip(self.lower, self.upper)):
            raise RejectedInput(f"grid bounds are not ordered: {self.lower} / {self.upper}")
        if self.membership_thickness is not None and not self.membership_thickness > 0:
            raise RejectedInput(f"membership thickness must be positive, got {self.membership_thickness}")

    @classmethod
    def from_box(cls, box: Sequence[float], resolution: int = 801, thickness: Optional[float] = None) -> 'GridSpec':
        """``box`` is ``(x1_lo, x1_hi, x2_lo, x2_hi)``."""
        if len(box) != 4:
            raise RejectedInput(f"box needs 4 numbers, got {len(box)}")
        a, b, c, d = (float(v) for v in box)
        return cls((a, c), (b, d), int(resolution), thickness)

    def axes(self) -> Tuple[np.ndarray, np.ndarray]:
        return (
            np.linspace(self.lower[0], self.upper[0], self.resolution),
            np.linspace(self.lower[1], self.upper[1], self.resolution),
        )

    @property
    def spacing(self) -> Tuple[float, float]:
        return tuple((hi - lo) / (self.resolution - 1) for lo, hi in zip(self.lower, self.upper))

    @property
    def delta(self) -> float:
        if self.membership_thickness is not None:
            return float(self.membership_thickness)
        return math.hypot(*self.spacing)

    def points(self) -> np.ndarray:
        X1, X2 = np.meshgrid(*self.axes(), indexing='ij')
        return np.column_stack([X1.ravel(), X2.ravel()])


@dataclass(frozen=True)
class LevelSweepReport:
    levels: Tuple[float, ...]
    betti0_per_level: Tuple[int, ...]
    change_levels: Tuple[float, ...]
    stationary_values: Tuple[float, ...]
    components_created: Tuple[int, ...]
    components_merged: Tuple[int, ...]
    compactness_note: str = COMPACTNESS_NOTE

    def transitions(self) -> List[Tuple[float, int, int]]:
        """``(level, count_before, count_after)`` for every change level."""
        out = []
        previous = 0
        for level, count in zip(self.levels, self.betti0_per_level):
            if count != previous:
                out.append((level, previous, count))
            previous = count
        return out


def _require_planar(problem: MpocProblem) -> None:
    if problem.n != 2:
        raise RejectedInput(f"landscape needs n = 2, got n = {problem.n}")


def _band(problem: MpocProblem, points: np.ndarray, delta: float) -> np.ndarray:
    keep = np.ones(points.shape[0], dtype=bool)
    h = problem.h.evaluate_batch(points)
    if h.shape[1]:
        keep &= np.all(np.abs(h) <= delta, axis=1)
    g = problem.g.evaluate_batch(points)
    if g.shape[1]:
        keep &= np.all(g >= -delta, axis=1)
    if problem.k:
        F1 = problem.F1.evaluate_batch(points)
        F2 = problem.F2.evaluate_batch(points)
        distance = np.minimum(np.abs(F2), np.abs(F1) + np.maximum(0.0, -F2))
        keep &= np.all(F2 >= -delta, axis=1) & np.all(distance <= delta, axis=1)
    return keep


def grid_feasible_mask(problem: MpocProblem, grid: GridSpec) -> np.ndarray:
    """Boolean ``(resolution, resolution)`` mask, axis 0 along x1."""
    _require_planar(problem)
    mask = _band(problem, grid.points(), grid.delta)
    return mask.reshape(grid.resolution, grid.resolution)


def objective_grid(problem: MpocProblem, grid: GridSpec) -> np.ndarray:
    _require_planar(problem)
    return problem.f.evaluate_batch(grid.points())[:, 0].reshape(grid.resolution, grid.resolution)


def _level_slack(a: float) -> float:
    return 1e-12 * (1.0 + abs(a))


def _label(region: np.ndarray) -> Tuple[np.ndarray, int]:
    labels, count = ndimage.label(region, structure=EIGHT_NEIGHBOURS)
    return labels, int(count)


def betti0_lower_level(problem: MpocProblem, grid: GridSpec, a: float) -> int:
    """Number of 8-connected components of the band restricted to f <= a."""
    mask = grid_feasible_mask(problem, grid)
    values = objective_grid(problem, grid)
    return _label(mask & (values <= a + _level_slack(a)))[1]


def _created_and_merged(previous: np.ndarray, current: np.ndarray, count: int) -> Tuple[int, int]:
    """Compare nested labellings of consecutive lower level sets."""
    if count == 0:
        return 0, 0
    inside = previous > 0
    pairs = np.unique(np.column_stack([current[inside], previous[inside]]), axis=0)
    inherited = np.bincount(pairs[:, 0], minlength=count + 1)[1:] if pairs.size else np.zeros(count, dtype=int)
    created = int(np.sum(inherited == 0))
    merged = int(np.sum(np.maximum(inherited - 1, 0)))
    return created, merged


def sweep_levels(
    problem: MpocProblem,
    grid: GridSpec,
    levels: Sequence[float],
    stationary_points: Sequence[Sequence[float]] = (),
) -> LevelSweepReport:
    """
    Component counts over ascending levels.

    The count before the first level is taken as zero, so a nonempty first
    level is itself a change level. ``components_created`` counts components
    containing none of the previous level's pixels (minima crossed);
    ``components_merged`` counts previous components absorbed into a common
    one (1-cells attached).
    """
    levels = tuple(float(a) for a in levels)
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise RejectedInput("levels must be strictly increasing")
    mask = grid_feasible_mask(problem, grid)
    values = objective_grid(problem, grid)
    logger.info(
        "sweeping %d levels on a %dx%d grid, %d band points",
        len(levels), grid.resolution, grid.resolution, int(mask.sum()),
    )

    counts, changes, created, merged = [], [], [], []
    previous_labels = np.zeros(mask.shape, dtype=int)
    previous_count = 0
    for a in levels:
        labels, count = _label(mask & (values <= a + _level_slack(a)))
        born, joined = _created_and_merged(previous_labels, labels, count)
        counts.append(count)
        created.append(born)
        merged.append(joined)
        if count != previous_count:
            changes.append(a)
            logger.debug("level %g: %d -> %d components", a, previous_count, count)
        previous_labels, previous_count = labels, count

    stationary_values = tuple(problem.objective(as_point(x, 2)) for x in stationary_points)
    return LevelSweepReport(
        levels=levels,
        betti0_per_level=tuple(counts),
        change_levels=tuple(changes),
        stationary_values=stationary_values,
        components_created=tuple(created),
        components_merged=tuple(merged),
    )


def parse_levels(text: str) -> Tuple[float, ...]:
    """Parse ``lo:hi:step`` into an inclusive, rounded level list."""
    parts = text.split(':')
    if len(parts) != 3:
        raise RejectedInput(f"levels must look like lo:hi:step, got {text!r}")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError:
        raise RejectedInput(f"levels must be numbers, got {text!r}") from None
    if not (math.isfinite(lo) and math.isfinite(hi) and math.isfinite(step)):
        raise RejectedInput(f"levels must be finite, got {text!r}")
    if step <= 0 or hi < lo:
        raise RejectedInput(f"levels need lo <= hi and step > 0, got {text!r}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return tuple(round(lo + i * step, 12) for i in range(count))


# ========== LOCAL WITNESS ==========

@dataclass(frozen=True)
class GridWitness:
    center_value: float
    found: bool
    point: Optional[Tuple[float, ...]] = None
    value: Optional[float] = None
    searched: int = 0


def local_grid_witness(
    problem: MpocProblem,
    center,
    radius: float = 0.05,
    step: float = 0.005,
    tol: Optional[Tolerances] = None,
) -> GridWitness:
    """
    Search a cube around ``center`` for a feasible point with smaller f.

    Grid points are ``center + k * step``, so branches through the center are
    sampled exactly. Feasibility uses ``tol.feasibility``; a witness must beat
    the center value by more than ``tol.stationarity_residual``.
    """
    tol = resolve_tolerances(tol)
    center = as_point(center, problem.n, 'center')
    if not (radius > 0 and step > 0):
        raise RejectedInput("radius and step must be positive")
    ticks = np.arange(-math.floor(radius / step), math.floor(radius / step) + 1) * step
    total = ticks.size ** problem.n
    if total > 2_000_000:
        raise RejectedInput(f"witness grid has {total} points; increase step or shrink radius")

    offsets = np.stack(np.meshgrid(*([ticks] * problem.n), indexing='ij'), axis=-1).reshape(-1, problem.n)
    points = center + offsets
    feasible = _band(problem, points, tol.feasibility)

    center_value = problem.objective(center)
    values = problem.f.evaluate_batch(points)[:, 0]
    better = feasible & (values < center_value - tol.stationarity_residual)
    if not better.any():
        return GridWitness(center_value, False, searched=int(feasible.sum()))
    best = int(np.argmin(np.where(better, values, np.inf)))
    return GridWitness(
        center_value,
        True,
        point=tuple(float(v) for v in points[best]),
        value=float(values[best]),
        searched=int(feasible.sum()),
    )


# ========== OUTPUT ==========

def write_csv(report: LevelSweepReport, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(['level', 'betti0'])
    for level, count in zip(report.levels, report.betti0_per_level):
        writer.writerow([repr(level), count])


def render_svg(report: LevelSweepReport, title: str = '', width: int = 640, height: int = 320) -> str:
    """Step plot of the component count against the level."""
    margin = 40
    lo, hi = report.levels[0], report.levels[-1]
    top = max(max(report.betti0_per_level, default=0), 1)
    span = (hi - lo) or 1.0

    def sx(level):
        return margin + (level - lo) / span * (width - 2 * margin)

    def sy(count):
        return height - margin - count / top * (height - 2 * margin)

    vertices = []
    for i, (level, count) in enumerate(zip(report.levels, report.betti0_per_level)):
        if i:
            vertices.append((sx(level), sy(report.betti0_per_level[i - 1])))
        vertices.append((sx(level), sy(count)))

    context = {
        'title': title,
        'width': width,
        'height': height,
        'margin': margin,
        'polyline': ' '.join(f'{x:.2f},{y:.2f}' for x, y in vertices),
        'stationary': [
            {'x': f'{sx(v):.2f}', 'value': f'{v:g}'} for v in report.stationary_values if lo <= v <= hi
        ],
        'ticks': [{'y': f'{sy(c):.2f}', 'count': c} for c in range(top + 1)],
        'lo': f'{lo:g}',
        'hi': f'{hi:g}',
        'axis_y': height - margin,
        'axis_x': width - margin,
    }
    return render_to_string('mpoc/landscape.svg', context)
