"""Aggregated values, measures and potentially-optimal candidate selection.

Selection works on :class:`MeasureGroup` records: elements sharing a measure
``delta`` with their ids and aggregated values sorted so the best member
comes first.  Strategies return the ids of group representatives; the
equal-candidate rule then expands or trims ties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .geometry import Element, _sq_dist, element_midpoint, longest_edge_data

AGGREGATIONS = ("Midpoint", "Minimum", "Mean", "MidMin")
MEASURES = ("Diagonal", "LongSide")
STRATEGIES = ("Original", "Aggressive", "Pareto", "RedPareto")
EQUAL_CAND = ("All", "One")
SOL_REFIN = ("Min", "Median", "Average", "Off")
CONTROL_EP = ("Off", "Restart", "MultiLevel1", "MultiLevel2")

GROUP_RTOL = 1e-12

W_CYCLE = "21011012"
MULTILEVEL2_EPS = {2: 1e-5, 1: 1e-7, 0: 0.0}
MULTILEVEL1_EPS = 1e-4
RESTART_EPS = 0.01
RESTART_STALL = 5
RESTART_HOLD = 50

DEFAULT_LAMBDA = {"DTC": 0.5, "DBDP": 2.0 / 3.0, "DBC": 1.0}


def default_lambda(scheme: str) -> float:
    return DEFAULT_LAMBDA.get(scheme, 1.0)


def aggregate_value(element: Element, aggr: str) -> float:
    """Aggregated value of an element from its samples.

    Midpoint and MidMin need a sample at the cell midpoint; when the scheme
    does not provide one they fall back to the minimum sample value.
    """
    values = element.sample_values()
    if not values:
        raise ValueError(f"element {element.id} has no samples")
    if aggr in ("Minimum", "Min"):
        return min(values)
    if aggr == "Mean":
        return math.fsum(values) / len(values)
    mid = element.midpoint_value()
    if aggr == "Midpoint":
        return min(values) if mid is None else mid
    if aggr == "MidMin":
        lo = min(values)
        return lo if mid is None else 0.5 * (mid + lo)
    raise ValueError(f"unknown aggregation {aggr!r}")


def squared_size(element: Element, cand_measure: str) -> Fraction:
    """Exact squared size before the lambda factor.

    Diagonal: squared box diagonal or squared longest simplex edge.
    LongSide: largest squared distance between two sample points; with a
    single distinct sample this falls back to the squared longest side/edge.
    """
    if cand_measure == "Diagonal":
        if element.is_box:
            return sum((s * s for s in element.sides()), Fraction(0))
        return _longest_edge_sq(element)
    if cand_measure != "LongSide":
        raise ValueError(f"unknown measure {cand_measure!r}")
    pts = element.sample_points()
    best = Fraction(0)
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            d = _sq_dist(pts[i], pts[j])
            if d > best:
                best = d
    if best == 0:
        if element.is_box:
            side = max(element.sides())
            return side * side
        return _longest_edge_sq(element)
    return best


def _longest_edge_sq(element: Element) -> Fraction:
    return longest_edge_data(element)[0]


def measure(element: Element, cand_measure: str, lam: float = 1.0) -> float:
    return lam * math.sqrt(squared_size(element, cand_measure))


@dataclass(frozen=True)
class MeasureGroup:
    """Elements sharing one measure value.

    ``ids``/``values`` are sorted by (value ascending, id descending).  They
    may be trimmed to the best-valued members only; ``size`` always counts
    every element with this measure.
    """

    delta: float
    ids: tuple
    values: tuple
    size: int

    @property
    def best(self) -> float:
        return self.values[0]

    @property
    def rep(self) -> int:
        return self.ids[0]


def _sorted_members(members):
    members = sorted(members, key=lambda iv: (iv[1], -iv[0]))
    return tuple(i for i, _ in members), tuple(v for _, v in members)


def group_by_measure(ids: Sequence[int], deltas: Sequence[float], values: Sequence[float]) -> list:
    """Group elements by measure (relative tolerance 1e-12), ascending delta."""
    if len(ids) == 0:
        return []
    order = sorted(range(len(ids)), key=lambda k: deltas[k])
    groups = []
    start = deltas[order[0]]
    members = []
    for k in order:
        d = deltas[k]
        if members and d - start > GROUP_RTOL * abs(d):
            groups.append(_make_group(start, members))
            members = []
            start = d
        members.append((ids[k], values[k]))
    groups.append(_make_group(start, members))
    return groups


def _make_group(delta, members) -> MeasureGroup:
    gids, gvals = _sorted_members(members)
    return MeasureGroup(delta=delta, ids=gids, values=gvals, size=len(gids))


def trim_group(group: MeasureGroup) -> MeasureGroup:
    """Keep only the members tied on the group's best value."""
    k = 1
    while k < len(group.values) and group.values[k] == group.values[0]:
        k += 1
    return replace(group, ids=group.ids[:k], values=group.values[:k])


def refinement_target(f_min: float, sol_refin: str, ep: float,
                      f_median: float | None = None, f_average: float | None = None) -> float | None:
    """Right-hand side of the excessive-refinement inequality (None when Off)."""
    if sol_refin == "Off":
        return None
    if sol_refin == "Min":
        base = abs(f_min)
    elif sol_refin == "Median":
        if f_median is None:
            raise ValueError("Median refinement needs f_median")
        base = abs(f_min - f_median)
    elif sol_refin == "Average":
        if f_average is None:
            raise ValueError("Average refinement needs f_average")
        base = abs(f_min - f_average)
    else:
        raise ValueError(f"unknown refinement rule {sol_refin!r}")
    return f_min - ep * base


def _require(groups):
    if not groups:
        raise ValueError("selection needs at least one element")


def select_original(groups: Sequence[MeasureGroup], f_min: float, sol_refin: str = "Min", ep: float = 1e-4,
                    f_median: float | None = None, f_average: float | None = None) -> set:
    """Representatives on the lower-right convex hull that pass the refinement rule.

    Hull arithmetic is exact over the rationals of the input floats, so
    collinear and tied points are handled deterministically.
    """
    _require(groups)
    target = refinement_target(f_min, sol_refin, ep, f_median, f_average)
    pts = [(Fraction(g.delta), Fraction(g.best), g.rep) for g in groups]
    pts.sort(key=lambda p: p[0])
    # the hull starts at the lowest value, preferring the larger measure
    start = min(range(len(pts)), key=lambda k: (pts[k][1], -pts[k][0]))
    hull = []
    for p in pts[start:]:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) < 0:
            hull.pop()
        hull.append(p)
    selected = set()
    tgt = None if target is None else Fraction(target)
    for k, (d, f, rep) in enumerate(hull):
        if k + 1 < len(hull) and tgt is not None:
            nd, nf, _ = hull[k + 1]
            slope = (nf - f) / (nd - d)
            if f - slope * d > tgt:
                continue
        selected.add(rep)
    return selected


def _cross(o, a, b) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def select_aggressive(groups: Sequence[MeasureGroup]) -> set:
    _require(groups)
    return {g.rep for g in groups}


def select_pareto(groups: Sequence[MeasureGroup]) -> set:
    """Representatives not dominated under (larger delta, smaller value)."""
    _require(groups)
    selected = set()
    best_right = math.inf
    for g in sorted(groups, key=lambda g: g.delta, reverse=True):
        if g.best < best_right:
            selected.add(g.rep)
            best_right = g.best
    return selected


def select_reduced_pareto(groups: Sequence[MeasureGroup]) -> set:
    """Lowest-value element plus the best element of the largest measure."""
    _require(groups)
    lowest = min(groups, key=lambda g: (g.best, -g.delta, -g.rep))
    largest = max(groups, key=lambda g: g.delta)
    return {lowest.rep, largest.rep}


def select(strategy: str, groups: Sequence[MeasureGroup], f_min: float, sol_refin: str = "Min", ep: float = 1e-4,
           f_median: float | None = None, f_average: float | None = None) -> set:
    if strategy == "Original":
        return select_original(groups, f_min, sol_refin, ep, f_median, f_average)
    if strategy == "Aggressive":
        return select_aggressive(groups)
    if strategy == "Pareto":
        return select_pareto(groups)
    if strategy == "RedPareto":
        return select_reduced_pareto(groups)
    raise ValueError(f"unknown selection strategy {strategy!r}")


def apply_equal_candidates(selected: Iterable[int], groups: Sequence[MeasureGroup], equal_cand: str) -> set:
    """Expand (All) or thin (One) ties on (delta, value) around selected ids."""
    selected = set(selected)
    out = set()
    for g in groups:
        hit = [i for i in g.ids if i in selected]
        if not hit:
            continue
        for i in hit:
            v = g.values[g.ids.index(i)]
            tied = [j for j, w in zip(g.ids, g.values) if w == v]
            if equal_cand == "All":
                out.update(tied)
            elif equal_cand == "One":
                out.add(max(tied))
            else:
                raise ValueError(f"unknown equal-candidate rule {equal_cand!r}")
    return out


@dataclass(frozen=True)
class EpsilonState:
    mode: str = "Off"
    current_ep: float = 1e-4
    stagnation_counter: int = 0
    phase_counter: int = 0
    cycle_index: int = 0
    current_level: int = 2


def initial_epsilon(mode: str, ep: float = 1e-4) -> EpsilonState:
    if mode == "Off":
        return EpsilonState(mode, ep)
    if mode == "Restart":
        return EpsilonState(mode, 0.0)
    if mode in ("MultiLevel1", "MultiLevel2"):
        level = int(W_CYCLE[0])
        eps = MULTILEVEL1_EPS if mode == "MultiLevel1" else MULTILEVEL2_EPS[level]
        return EpsilonState(mode, eps, cycle_index=0, current_level=level)
    raise ValueError(f"unknown epsilon control {mode!r}")


def epsilon_step(state: EpsilonState, improved: bool) -> EpsilonState:
    """Advance the epsilon controller by one iteration."""
    if state.mode == "Off":
        return state
    if state.mode == "Restart":
        if state.current_ep == 0.0:
            stall = 0 if improved else state.stagnation_counter + 1
            if stall >= RESTART_STALL:
                return replace(state, current_ep=RESTART_EPS, stagnation_counter=0, phase_counter=0)
            return replace(state, stagnation_counter=stall)
        held = state.phase_counter + 1
        if improved or held >= RESTART_HOLD:
            return replace(state, current_ep=0.0, stagnation_counter=0, phase_counter=0)
        return replace(state, phase_counter=held)
    idx = (state.cycle_index + 1) % len(W_CYCLE)
    level = int(W_CYCLE[idx])
    eps = MULTILEVEL1_EPS if state.mode == "MultiLevel1" else MULTILEVEL2_EPS[level]
    return replace(state, cycle_index=idx, current_level=level, current_ep=eps)


def multilevel_restrict(groups: Sequence[MeasureGroup], level: int) -> list:
    """Level 2: all groups; level 1: drop the largest-measure 10% of elements;
    level 0: keep only that 10%.  The quota is ceil(0.1 * elements), filled by
    whole groups from the largest measure down.  A level that would leave
    nothing falls back to all groups."""
    groups = list(groups)
    if level == 2 or not groups:
        return groups
    total = sum(g.size for g in groups)
    quota = math.ceil(0.1 * total)
    taken, cut = 0, len(groups)
    while taken < quota and cut > 0:
        cut -= 1
        taken += groups[cut].size
    kept = groups[cut:] if level == 0 else groups[:cut]
    return kept or groups


@dataclass(frozen=True)
class GlobalBiasState:
    phase: str = "Usual"
    stagnation_counter: int = 0
    global_iterations_used: int = 0
    min_measure_threshold: float = 0.0
    stall_limit: int = 10
    global_cap: int = 10


def significant_improvement(f_old: float, f_new: float, rel: float = 1e-4) -> bool:
    return f_old - f_new > rel * abs(f_old) if f_old != 0 else f_new < f_old


def global_bias_filter(state: GlobalBiasState, groups: Sequence[MeasureGroup], improved: bool):
    """Switch between the usual and the globally-biased phase.

    ``improved`` should reflect a significant improvement of f_min in the
    previous iteration.  In the global phase only groups whose measure is at
    least the threshold frozen at phase entry are kept.
    """
    groups = list(groups)
    if state.phase == "Usual":
        stall = 0 if improved else state.stagnation_counter + 1
        if stall < state.stall_limit:
            return groups, replace(state, stagnation_counter=stall)
        deltas = [g.delta for g in groups]
        state = replace(state, phase="Global", stagnation_counter=0, global_iterations_used=0,
                        min_measure_threshold=float(np.median(deltas)))
    elif improved or state.global_iterations_used >= state.global_cap:
        return groups, replace(state, phase="Usual", stagnation_counter=0, global_iterations_used=0)
    state = replace(state, global_iterations_used=state.global_iterations_used + 1)
    kept = [g for g in groups if g.delta >= state.min_measure_threshold]
    return (kept or groups[-1:]), state


def two_phase_expand(selected: Iterable[int], ids: Sequence[int], deltas: Sequence[float], midpoints,
                     x_min, strategy: str) -> set:
    """Union of ``selected`` with the selection made on distances to x_min.

    The distance pass reuses the measures, replaces every aggregated value by
    the Euclidean distance of the element midpoint to x_min and switches the
    refinement rule off.
    """
    dist = np.linalg.norm(np.asarray(midpoints, dtype=float) - np.asarray(x_min, dtype=float), axis=1)
    groups = [trim_group(g) for g in group_by_measure(list(ids), list(deltas), dist.tolist())]
    front = select(strategy, groups, float(dist.min()), sol_refin="Off")
    return set(selected) | front


def midpoint_array(elements: Sequence[Element]) -> np.ndarray:
    return np.array([[float(c) for c in element_midpoint(e)] for e in elements])
