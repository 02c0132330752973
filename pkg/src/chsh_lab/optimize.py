"""Grid search plus coordinate descent over planar CHSH settings."""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .operators import STANDARD_PLANAR_DEG, AngleConfig, s_weak_quantum

Objective = Callable[[AngleConfig], float]

OBJECTIVES: dict[str, Objective] = {"s_weak_quantum": s_weak_quantum}

MIN_RESOLUTION = 8
STEP_FLOOR = 1e-8
# strict improvement margin, keeps the first (lexicographically smallest) grid maximum
IMPROVE_EPS = 1e-13


@dataclass(frozen=True)
class OptimizationResult:
    angles_deg: tuple[float, float, float, float]
    value: float
    grid_angles_deg: tuple[float, float, float, float]
    grid_value: float
    evaluations: int

    @property
    def config(self) -> AngleConfig:
        return AngleConfig.planar(*self.angles_deg)


def _resolve(objective) -> Objective:
    if isinstance(objective, str):
        try:
            return OBJECTIVES[objective]
        except KeyError:
            raise ValueError(f"unknown objective {objective!r}; choose from {sorted(OBJECTIVES)}") from None
    return objective


def _evaluate(fn: Objective, angles: Sequence[float]) -> float:
    return fn(AngleConfig.planar(*angles))


def grid_search(
    objective="s_weak_quantum",
    resolution: int = MIN_RESOLUTION,
    *,
    free: Sequence[int] = (0, 1, 2, 3),
    base: Sequence[float] = STANDARD_PLANAR_DEG,
    workers: int = 1,
) -> tuple[tuple[float, ...], float, int]:
    """Exhaustive scan of ``resolution`` evenly spaced angles per free coordinate.

    Ties are broken toward the lexicographically smallest angle tuple, so the
    result does not depend on ``workers``.
    """
    fn = _resolve(objective)
    if resolution < MIN_RESOLUTION:
        raise ValueError(f"resolution must be >= {MIN_RESOLUTION}, got {resolution}")
    free = tuple(sorted(set(free)))
    if not free or any(i not in range(4) for i in free):
        raise ValueError(f"free coordinates must be a non-empty subset of 0..3, got {free}")
    ticks = [360.0 * k / resolution for k in range(resolution)]
    points = []
    for combo in itertools.product(ticks, repeat=len(free)):
        angles = list(base)
        for i, t in zip(free, combo):
            angles[i] = t
        points.append(tuple(angles))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(lambda p: _evaluate(fn, p), points, chunksize=64))
    else:
        values = [_evaluate(fn, p) for p in points]

    best_i = 0
    for i, val in enumerate(values):
        if val > values[best_i] + IMPROVE_EPS:
            best_i = i
    return points[best_i], values[best_i], len(points)


def coordinate_descent(
    objective,
    start: Sequence[float],
    step: float,
    *,
    free: Sequence[int] = (0, 1, 2, 3),
    step_floor: float = STEP_FLOOR,
) -> tuple[tuple[float, ...], float, int]:
    """Maximize by trying +/- step on each free coordinate; halve the step when nothing improves."""
    fn = _resolve(objective)
    x = list(start)
    best = _evaluate(fn, x)
    evals = 1
    while step >= step_floor:
        improved = False
        for i in free:
            for sgn in (1.0, -1.0):
                trial = list(x)
                trial[i] = x[i] + sgn * step
                val = _evaluate(fn, trial)
                evals += 1
                if val > best + IMPROVE_EPS:
                    x, best, improved = trial, val, True
                    break
        if not improved:
            step *= 0.5
    return tuple(a % 360.0 for a in x), best, evals


def optimize_angles(
    objective="s_weak_quantum",
    resolution: int = MIN_RESOLUTION,
    *,
    free: Sequence[int] = (0, 1, 2, 3),
    base: Optional[Sequence[float]] = None,
    workers: int = 1,
) -> OptimizationResult:
    """Coarse grid over planar configurations, then local refinement.

    Coordinates not listed in ``free`` stay at ``base`` (the standard planar
    settings by default).
    """
    base = tuple(STANDARD_PLANAR_DEG if base is None else base)
    grid_pt, grid_val, n_grid = grid_search(objective, resolution, free=free, base=base, workers=workers)
    step = 0.5 * 360.0 / resolution
    pt, val, n_cd = coordinate_descent(objective, grid_pt, step, free=free)
    return OptimizationResult(
        angles_deg=tuple(float(a) for a in pt),
        value=float(val),
        grid_angles_deg=tuple(float(a) for a in grid_pt),
        grid_value=float(grid_val),
        evaluations=n_grid + n_cd,
    )
