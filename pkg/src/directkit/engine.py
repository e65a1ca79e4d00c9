"""The main optimization loop.

Each iteration groups the live cells by measure, applies the epsilon and
phase controls, selects potentially optimal cells, subdivides them one at a
time (checking the stopping rules after each), runs the hybrid local search
and records a trace entry.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .config import AlgorithmConfig, validate_config
from .geometry import EvalCache, element_midpoint, init_partition, make_scaler, subdivide
from .hybrid import HybridDriver, LocalSearchLimits
from .selection import (GROUP_RTOL, GlobalBiasState, MeasureGroup, aggregate_value, apply_equal_candidates,
                        epsilon_step, global_bias_filter, initial_epsilon, multilevel_restrict, select,
                        significant_improvement, squared_size, two_phase_expand)

STOP_REASONS = ("goal", "pe", "evals", "iters", "time", "resolution")

# cells whose squared diagonal falls below this are too small for the
# 12-digit evaluation cache to tell their samples apart; they are frozen
MIN_SQ_SIZE = Fraction(1, 10**20)


def percent_error(f: float, f_star: float) -> float:
    """Percent error of ``f`` relative to the known optimum ``f_star``."""
    if f < f_star - 1e-9:
        raise ValueError(f"value {f!r} lies below the stated optimum {f_star!r}")
    if f_star == 0:
        return 100.0 * f
    return 100.0 * (f - f_star) / abs(f_star)


@dataclass(frozen=True)
class OptProblem:
    """Box-constrained minimization problem in original units."""

    objective: object
    a: tuple
    b: tuple
    f_star: float | None = None
    x_star: tuple | None = None
    f_goal: float | None = None
    name: str = ""

    def __post_init__(self):
        scaler = make_scaler(self.a, self.b)
        object.__setattr__(self, "a", tuple(scaler.a.tolist()))
        object.__setattr__(self, "b", tuple(scaler.b.tolist()))

    @property
    def n(self) -> int:
        return len(self.a)


@dataclass(frozen=True)
class RunLimits:
    """Stopping limits; ``max_evals`` defaults to n * 10**5."""

    max_evals: int | None = None
    max_iters: int | None = None
    max_time: float | None = None
    pe_tolerance: float = 0.01

    def __post_init__(self):
        for name in ("max_evals", "max_iters", "max_time"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive, got {v!r}")
        if not self.pe_tolerance > 0:
            raise ValueError("pe_tolerance must be positive")

    def evals_for(self, n: int) -> int:
        return self.max_evals if self.max_evals is not None else n * 10**5


@dataclass(frozen=True)
class TraceRecord:
    k: int
    m: int
    f_min: float
    selected: int
    ep: float
    phase: str


@dataclass
class RunResult:
    f_min: float
    x_min: np.ndarray
    k: int
    m: int
    pe: float | None
    stop_reason: str
    trace: list = field(default_factory=list)
    wall_ms: float = 0.0

    def f_min_at(self, budget: int) -> float:
        """Best value known once ``budget`` evaluations had been spent."""
        best = math.inf
        for rec in self.trace:
            if rec.m > budget:
                break
            best = rec.f_min
        return best


@dataclass
class RunState:
    f_min: float
    m: int
    k: int
    elapsed: float = 0.0


def should_stop(state: RunState, limits: RunLimits, n: int, f_star: float | None = None,
                f_goal: float | None = None) -> str | None:
    """First applicable stop reason in priority order goal, pe, evals, iters, time."""
    if f_goal is not None and state.f_min <= f_goal:
        return "goal"
    if f_star is not None and percent_error(state.f_min, f_star) < limits.pe_tolerance:
        return "pe"
    if state.m >= limits.evals_for(n):
        return "evals"
    if limits.max_iters is not None and state.k >= limits.max_iters:
        return "iters"
    if limits.max_time is not None and state.elapsed >= limits.max_time:
        return "time"
    return None


def _target(problem: OptProblem, limits: RunLimits) -> float | None:
    """Value at or below which the run would stop on goal or pe."""
    targets = []
    if problem.f_goal is not None:
        targets.append(problem.f_goal)
    if problem.f_star is not None:
        scale = abs(problem.f_star) if problem.f_star != 0 else 1.0
        targets.append(problem.f_star + 0.999 * limits.pe_tolerance / 100.0 * scale)
    return max(targets) if targets else None


class _Groups:
    """Incremental measure groups: one lazy heap of (value, -id) per exact size."""

    def __init__(self, elements):
        self.elements = elements
        self.heaps = {}
        self.counts = {}
        self.delta = {}
        self.meta = {}
        self.value_sum = 0.0

    def add(self, eid: int, key, delta: float, value: float):
        if key not in self.heaps:
            self.heaps[key] = []
            self.counts[key] = 0
            self.delta[key] = delta
        heapq.heappush(self.heaps[key], (value, -eid))
        self.counts[key] += 1
        self.meta[eid] = (key, value)
        self.value_sum += value

    def remove(self, eid: int):
        key, value = self.meta.pop(eid)
        self.counts[key] -= 1
        self.value_sum -= value

    def build(self) -> list:
        raw = []
        for key in list(self.heaps):
            if self.counts[key] == 0:
                del self.heaps[key], self.counts[key], self.delta[key]
                continue
            heap = self.heaps[key]
            while -heap[0][1] not in self.elements:
                heapq.heappop(heap)
            top = heap[0][0]
            tied = []
            while heap and heap[0][0] == top:
                entry = heapq.heappop(heap)
                if -entry[1] in self.elements:
                    tied.append(entry)
            for entry in tied:
                heapq.heappush(heap, entry)
            raw.append((self.delta[key], top, tuple(-e[1] for e in tied), self.counts[key]))
        raw.sort(key=lambda r: r[0])
        # exact sizes whose measures agree to 1e-12 share a group
        merged = []
        for entry in raw:
            if merged and entry[0] - merged[-1][0][0] <= GROUP_RTOL * abs(entry[0]):
                merged[-1].append(entry)
            else:
                merged.append([entry])
        groups = []
        for parts in merged:
            top = min(e[1] for e in parts)
            ids = sorted((i for e in parts if e[1] == top for i in e[2]), reverse=True)
            groups.append(MeasureGroup(parts[0][0], tuple(ids), (top,) * len(ids), sum(e[3] for e in parts)))
        return groups

    def values(self) -> np.ndarray:
        return np.fromiter((v for _, v in self.meta.values()), dtype=float, count=len(self.meta))


def run(config, problem: OptProblem, limits: RunLimits | None = None, seed: int | None = None) -> RunResult:
    """Minimize ``problem`` with the algorithm described by ``config``.

    ``config`` is an :class:`AlgorithmConfig` or a dotted-key dict.  The
    engine is deterministic; ``seed`` is accepted for interface symmetry
    with the benchmark harness and does not influence the run.
    """
    cfg = config if isinstance(config, AlgorithmConfig) else validate_config(config)
    limits = limits or RunLimits()
    n = problem.n
    max_evals = limits.evals_for(n)
    scaler = make_scaler(problem.a, problem.b)
    objective = problem.objective

    def unit_objective(u):
        return objective(scaler.to_original(u))

    t0 = time.perf_counter()
    cache = EvalCache(unit_objective)
    part, _ = init_partition(cfg.scheme, n, cache, cfg.side_rule)
    lam = cfg.measure_lambda
    groups = _Groups(part.elements)

    need_mids = cfg.two_phase == "On" or cfg.hybrid == "Aggressive"
    mids = {}

    def register(el):
        key = squared_size(el, cfg.cand_measure)
        diag = key if cfg.cand_measure == "Diagonal" else squared_size(el, "Diagonal")
        if diag < MIN_SQ_SIZE:
            return
        groups.add(el.id, key, lam * math.sqrt(key), aggregate_value(el, cfg.aggr))
        if need_mids:
            mids[el.id] = [float(c) for c in element_midpoint(el)]

    for el in part:
        register(el)

    best = int(np.argmin(cache.values))
    f_min, x_min = cache.values[best], cache.points[best]
    seen = cache.evaluations
    ls_evals = 0

    eps_state = initial_epsilon(cfg.control_ep, cfg.ep)
    gb_state = GlobalBiasState()
    driver = HybridDriver(cfg.hybrid, cfg.local_search,
                          LocalSearchLimits(cfg.ls_max_iterations, cfg.ls_max_evaluations), n)
    target = _target(problem, limits)

    def state(k):
        return RunState(f_min, cache.evaluations + ls_evals, k, time.perf_counter() - t0)

    def phase_name():
        if cfg.control_ep.startswith("MultiLevel"):
            return f"level{eps_state.current_level}"
        return gb_state.phase.lower()

    k = 0
    trace = [TraceRecord(0, cache.evaluations, f_min, 0, eps_state.current_ep, phase_name())]
    stop = should_stop(state(k), limits, n, problem.f_star, problem.f_goal)
    improved = significant = False
    while stop is None:
        if k > 0:
            eps_state = epsilon_step(eps_state, improved)
        grp = groups.build()
        if not grp:
            stop = "resolution"
            break
        if cfg.control_ep.startswith("MultiLevel"):
            grp = multilevel_restrict(grp, eps_state.current_level)
        if cfg.globally_biased == "On":
            grp, gb_state = global_bias_filter(gb_state, grp, significant)
        f_median = f_average = None
        if cfg.sol_refin == "Median":
            f_median = float(np.median(groups.values()))
        elif cfg.sol_refin == "Average":
            f_average = groups.value_sum / len(groups.meta)
        chosen = select(cfg.strategy, grp, f_min, cfg.sol_refin, eps_state.current_ep, f_median, f_average)
        chosen = apply_equal_candidates(chosen, grp, cfg.equal_cand)
        if cfg.two_phase == "On":
            ids = list(groups.meta)
            deltas = [groups.delta[groups.meta[i][0]] for i in ids]
            chosen = two_phase_expand(chosen, ids, deltas, [mids[i] for i in ids], x_min, cfg.strategy)
        order = sorted(chosen)
        poc_mids = [mids[i] for i in order] if cfg.hybrid == "Aggressive" else []

        f_before = f_min
        stop = None
        for eid in order:
            groups.remove(eid)
            mids.pop(eid, None)
            for cid in subdivide(part, eid):
                register(part.elements[cid])
            if cache.evaluations > seen:
                new = cache.values[seen:]
                j = int(np.argmin(new))
                if new[j] < f_min:
                    f_min, x_min = new[j], cache.points[seen + j]
                seen = cache.evaluations
            stop = should_stop(state(k + 1), limits, n, problem.f_star, problem.f_goal)
            if stop in ("goal", "pe", "evals", "time"):
                break
            stop = None

        if stop is None and cfg.hybrid != "Off":
            m = cache.evaluations + ls_evals
            out = driver.step(unit_objective, f_min < f_before, poc_mids, (cache.points, cache.values),
                              f_min, x_min, m, max_evals - m, target)
            ls_evals += out.evals_used
            f_min, x_min = out.f_min, np.asarray(out.x_min, dtype=float)

        k += 1
        improved = f_min < f_before
        significant = significant_improvement(f_before, f_min)
        trace.append(TraceRecord(k, cache.evaluations + ls_evals, f_min, len(order),
                                 eps_state.current_ep, phase_name()))
        stop = should_stop(state(k), limits, n, problem.f_star, problem.f_goal)

    pe = percent_error(f_min, problem.f_star) if problem.f_star is not None else None
    return RunResult(f_min=f_min, x_min=scaler.to_original(x_min), k=k, m=cache.evaluations + ls_evals,
                     pe=pe, stop_reason=stop, trace=trace, wall_ms=1000.0 * (time.perf_counter() - t0))
