"""Bounded derivative-free local search and the hybridization strategies.

The four solver names accepted by the configuration come from a MATLAB
toolbox; here they all run the same box-projected Nelder-Mead search
followed by a compass-search polish and differ only in the initial step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.optimize import minimize

HYBRID_STRATEGIES = ("Off", "Single", "Clustering", "Aggressive")
LOCAL_SOLVERS = ("interior-point", "sqp", "sqp-legacy", "active-set")
INITIAL_STEP = {"interior-point": 0.05, "active-set": 0.05, "sqp": 0.02, "sqp-legacy": 0.02}

DEDUP_TOL = 1e-6


@dataclass(frozen=True)
class LocalSearchLimits:
    max_iterations: int = 1000
    max_evaluations: int = 3000

    def __post_init__(self):
        if self.max_iterations < 0 or self.max_evaluations < 0:
            raise ValueError("local search limits must be non-negative")


@dataclass(frozen=True)
class LocalSearchResult:
    x: np.ndarray
    f: float
    evals_used: int


class _Budget(Exception):
    pass


class _Counted:
    """Objective wrapper that counts calls, tracks the best point and stops
    the search on budget exhaustion or when the target is reached."""

    def __init__(self, func, budget: int, target: float | None):
        self.func = func
        self.budget = budget
        self.target = target
        self.calls = 0
        self.best_x = None
        self.best_f = math.inf

    def __call__(self, x) -> float:
        if self.calls >= self.budget:
            raise _Budget
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        self.calls += 1
        f = float(self.func(x))
        if not math.isfinite(f):
            f = math.inf
        if f < self.best_f:
            self.best_f, self.best_x = f, x.copy()
        if self.target is not None and f <= self.target:
            raise _Budget
        return f


def _initial_simplex(x0: np.ndarray, step: float) -> np.ndarray:
    n = x0.size
    sim = np.tile(x0, (n + 1, 1))
    for j in range(n):
        sim[j + 1, j] += step if x0[j] + step <= 1.0 else -step
    return sim


def _compass(obj: _Counted, step: float, min_step: float = 1e-10) -> None:
    x, f = obj.best_x.copy(), obj.best_f
    n = x.size
    while step > min_step:
        moved = False
        for j in range(n):
            for sign in (1.0, -1.0):
                y = x.copy()
                y[j] = min(1.0, max(0.0, y[j] + sign * step))
                if y[j] == x[j]:
                    continue
                fy = obj(y)
                if fy < f:
                    x, f, moved = y, fy, True
                    break
        if not moved:
            step *= 0.5


def local_search(func: Callable[[np.ndarray], float], x0, limits: LocalSearchLimits = LocalSearchLimits(),
                 solver: str = "interior-point", target: float | None = None, f0: float | None = None) -> LocalSearchResult:
    """Minimize ``func`` over the unit box starting from ``x0``.

    Every objective call counts against ``limits.max_evaluations``.  When
    ``f0`` (the known value at x0) is given it is not re-evaluated.  The
    search stops early once a value at or below ``target`` is found.
    """
    if solver not in INITIAL_STEP:
        raise ValueError(f"unknown local search {solver!r}; expected one of {LOCAL_SOLVERS}")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if np.any(x0 < -1e-12) or np.any(x0 > 1 + 1e-12):
        raise ValueError("x0 must lie in the unit box")
    x0 = np.clip(x0, 0.0, 1.0)
    # a zero budget still reports f(x0), at the cost of that one call
    obj = _Counted(func, max(limits.max_evaluations, 1 if f0 is None else 0), target)
    if f0 is None:
        try:
            obj(x0)
        except _Budget:
            pass
    else:
        obj.best_x, obj.best_f = x0.copy(), float(f0)
    if limits.max_evaluations == 0 or limits.max_iterations == 0 or (target is not None and obj.best_f <= target):
        return LocalSearchResult(obj.best_x, obj.best_f, obj.calls)
    step = INITIAL_STEP[solver]
    try:
        minimize(obj, x0, method="Nelder-Mead", bounds=[(0.0, 1.0)] * x0.size,
                 options={"maxiter": limits.max_iterations, "maxfev": limits.max_evaluations,
                          "initial_simplex": _initial_simplex(x0, step),
                          "xatol": 1e-10, "fatol": 1e-14})
        _compass(obj, step / 10)
    except _Budget:
        pass
    return LocalSearchResult(obj.best_x, obj.best_f, obj.calls)


def cluster_points(points, values, threshold: float | None = None) -> list:
    """Best point of each single-linkage cluster of the below-median archive.

    The default distance threshold is 0.1 * sqrt(n).  Representatives are
    returned in ascending order of value.
    """
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float)
    if points.ndim != 2 or len(points) == 0:
        raise ValueError("clustering needs a non-empty archive")
    if threshold is None:
        threshold = 0.1 * math.sqrt(points.shape[1])
    keep = values <= np.median(values)
    pts, vals = points[keep], values[keep]
    if len(pts) == 1:
        return [pts[0].copy()]
    labels = fcluster(linkage(pts, method="single"), t=threshold, criterion="distance")
    reps = []
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        best = idx[np.argmin(vals[idx])]
        reps.append((vals[best], pts[best].copy()))
    reps.sort(key=lambda r: r[0])
    return [p for _, p in reps]


@dataclass
class HybridOutcome:
    f_min: float
    x_min: np.ndarray
    evals_used: int
    launches: int


@dataclass
class HybridDriver:
    """Run-scoped state for one hybridization strategy (unit-space points)."""

    strategy: str = "Off"
    solver: str = "interior-point"
    limits: LocalSearchLimits = field(default_factory=LocalSearchLimits)
    n: int = 1
    clustered: bool = False

    def __post_init__(self):
        if self.strategy not in HYBRID_STRATEGIES:
            raise ValueError(f"unknown hybridization strategy {self.strategy!r}")
        if self.solver not in LOCAL_SOLVERS:
            raise ValueError(f"unknown local search {self.solver!r}")

    @property
    def cluster_trigger(self) -> int:
        return 100 * self.n + 1

    def starts(self, improved: bool, poc_midpoints: Sequence, archive, x_min, m: int) -> list:
        """Starting points for this iteration's local searches."""
        if self.strategy == "Off":
            return []
        if self.strategy == "Aggressive":
            out = []
            for p in poc_midpoints:
                p = np.asarray(p, dtype=float)
                if all(np.max(np.abs(p - q)) > DEDUP_TOL for q in out):
                    out.append(p)
            return out
        if self.strategy == "Clustering" and not self.clustered:
            if m < self.cluster_trigger:
                return []
            self.clustered = True
            pts, vals = archive
            return cluster_points(pts, vals)
        return [np.asarray(x_min, dtype=float)] if improved else []

    def step(self, func, improved: bool, poc_midpoints: Sequence, archive, f_min: float, x_min,
             m: int, budget_left: int, target: float | None = None,
             start_values: Sequence | None = None) -> HybridOutcome:
        """Launch this iteration's local searches and merge their results.

        ``func`` takes unit-space points.  ``budget_left`` caps the total
        evaluations; each search is additionally capped by the configured
        per-call limit.
        """
        x_min = np.asarray(x_min, dtype=float)
        used = launches = 0
        for x0 in self.starts(improved, poc_midpoints, archive, x_min, m):
            remaining = budget_left - used
            if remaining <= 0 or (target is not None and f_min <= target):
                break
            lim = LocalSearchLimits(self.limits.max_iterations, min(self.limits.max_evaluations, remaining))
            f0 = f_min if np.array_equal(x0, x_min) else None
            res = local_search(func, x0, lim, self.solver, target=target, f0=f0)
            used += res.evals_used
            launches += 1
            if res.f < f_min:
                f_min, x_min = res.f, res.x
        return HybridOutcome(f_min, x_min, used, launches)
