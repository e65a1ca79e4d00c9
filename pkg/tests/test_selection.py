import math
import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from directkit.geometry import init_partition
from directkit.selection import (EpsilonState, GlobalBiasState, MeasureGroup, aggregate_value, apply_equal_candidates,
                                 epsilon_step, global_bias_filter, group_by_measure, initial_epsilon, measure,
                                 multilevel_restrict, select, select_aggressive, select_original, select_pareto,
                                 select_reduced_pareto, two_phase_expand)

import oracles


def groups_of(points):
    """(delta, value) pairs -> groups, ids are positions."""
    return group_by_measure(list(range(len(points))), [d for d, _ in points], [v for _, v in points])


# aggregation


def _element(scheme, values):
    part, _ = init_partition(scheme, 2, lambda x: 0.0)
    el = part.elements[0]
    el.samples = tuple((p, v) for (p, _), v in zip(el.samples, values))
    return el


def test_aggregate_midpoint_identity():
    assert aggregate_value(_element("DTC", [3.2]), "Midpoint") == 3.2


def test_aggregate_mean():
    el = _element("DBC", [1.0])
    el.samples = el.samples + (((F(0), F(0)), 2.0), ((F(1), F(1)), 3.0))
    assert aggregate_value(el, "Mean") == 2.0


def test_aggregate_midmin():
    el = _element("DBC", [4.0])
    el.samples = el.samples + (((F(0), F(1, 2)), 2.0),)
    assert aggregate_value(el, "MidMin") == 3.0


def test_aggregate_midpoint_falls_back_to_minimum():
    el = _element("DTDV", [5.0, 1.0])
    assert aggregate_value(el, "Midpoint") == 1.0
    assert aggregate_value(el, "Min") == 1.0


def test_aggregate_empty_samples():
    el = _element("DTC", [1.0])
    el.samples = ()
    with pytest.raises(ValueError):
        aggregate_value(el, "Mean")


# measures


def test_measure_unit_square_diagonal():
    part, _ = init_partition("DTC", 2, lambda x: 0.0)
    assert measure(part.elements[0], "Diagonal", 1.0) == pytest.approx(math.sqrt(2), abs=0, rel=1e-15)


def test_measure_lambda_scaled_box():
    part, _ = init_partition("DTC", 2, lambda x: 0.0)
    el = part.add(lower=(F(0), F(0)), upper=(F(1, 3), F(1)), samples=(), anchor=())
    assert measure(el, "Diagonal", 0.5) == pytest.approx(math.sqrt(10) / 6, rel=1e-15)


def test_measure_longside_dtdv():
    part, _ = init_partition("DTDV", 2, lambda x: 0.0)
    assert measure(part.elements[0], "LongSide") == pytest.approx(math.sqrt(2), rel=1e-15)


# grouping


def test_grouping_counts():
    g = group_by_measure([0, 1, 2], [0.5, 0.5, 1.0], [1.0, 2.0, 3.0])
    assert [x.size for x in g] == [2, 1]
    assert [x.delta for x in g] == [0.5, 1.0]


def test_grouping_single():
    assert len(group_by_measure([7], [0.3], [1.0])) == 1


def test_grouping_tolerance_from_repeated_bisection():
    # the same diagonal reached by two different float paths
    a = math.sqrt(2.0) / 3 ** 9
    b = math.sqrt(2.0 * 9.0 ** -9)
    c = a * (1 + 1e-15)
    g = group_by_measure([0, 1, 2], [a, b, c], [0.0, 1.0, 2.0])
    assert len(g) == 1 and g[0].size == 3


# Original


def test_original_hull_example():
    g = groups_of([(1, 1), (2, 0), (3, 0.5)])
    assert select_original(g, 0.0, "Min", 0.0) == {1, 2}
    items = [(0, 1.0, 1.0), (1, 2.0, 0.0), (2, 3.0, 0.5)]
    assert oracles.original_oracle(items, 0.0, "Min", 0.0) == {1, 2}


def test_original_single_element():
    assert select_original(groups_of([(0.7, 3.0)]), 3.0) == {0}


def test_original_refinement_example_follows_oracle():
    # with f_min = 0 the margin eps*|f_min| vanishes, so the small cell
    # qualifies for every L in (0, 0.1]
    items = [(0, 1.0, 0.0), (1, 2.0, 0.1)]
    assert oracles.original_oracle(items, 0.0, "Min", 1e-4) == {0, 1}
    assert select_original(groups_of([(1, 0.0), (2, 0.1)]), 0.0, "Min", 1e-4) == {0, 1}


def test_original_refinement_prunes_small_cell():
    # a nonzero f_min gives the margin teeth
    pts = [(1.0, 1.0), (2.0, 1.001)]
    items = [(i, d, v) for i, (d, v) in enumerate(pts)]
    assert oracles.original_oracle(items, 1.0, "Min", 0.01) == {1}
    assert select_original(groups_of(pts), 1.0, "Min", 0.01) == {1}


def test_original_requires_context():
    with pytest.raises(ValueError):
        select_original(groups_of([(1, 0.0)]), 0.0, "Median", 1e-4)
    with pytest.raises(ValueError):
        select_original([], 0.0)


# Aggressive / Pareto / RedPareto


def test_aggressive_one_per_group():
    g = group_by_measure([0, 1, 2], [0.5, 0.5, 1.0], [3.0, 1.0, 2.0])
    assert select_aggressive(g) == {1, 2}
    g5 = groups_of([(d, -d) for d in (1, 2, 3, 4, 5)])
    assert len(select_aggressive(g5)) == 5


def test_pareto_examples():
    assert select_pareto(groups_of([(1, 0.1), (2, 0.3)])) == {0, 1}
    assert select_pareto(groups_of([(1, 1), (3, 0.5)])) == {1}
    assert select_pareto(groups_of([(1, 1)])) == {0}


def test_reduced_pareto_examples():
    assert select_reduced_pareto(groups_of([(1, 0.1), (2, 0.3)])) == {0, 1}
    assert select_reduced_pareto(groups_of([(2, 0.1)])) == {0}
    assert select_reduced_pareto(groups_of([(2, 0.5), (2, 0.2), (1, 0.0)])) == {2, 1}


def test_select_unknown_strategy():
    with pytest.raises(ValueError):
        select("Nope", groups_of([(1, 0)]), 0.0)


# equal candidates


def test_equal_candidates():
    g = group_by_measure([4, 9, 2], [1.0, 1.0, 0.5], [0.0, 0.0, 1.0])
    assert apply_equal_candidates({9}, g, "One") == {9}
    assert apply_equal_candidates({4}, g, "One") == {9}
    assert apply_equal_candidates({4}, g, "All") == {4, 9}
    assert apply_equal_candidates({2}, g, "All") == {2}


# epsilon control


def test_restart_switches_after_five_stalls():
    s = initial_epsilon("Restart")
    assert s.current_ep == 0.0
    for _ in range(4):
        s = epsilon_step(s, False)
        assert s.current_ep == 0.0
    s = epsilon_step(s, False)
    assert s.current_ep == 0.01
    assert epsilon_step(s, True).current_ep == 0.0


def test_restart_hold_expires():
    s = EpsilonState("Restart", 0.01)
    for _ in range(49):
        s = epsilon_step(s, False)
        assert s.current_ep == 0.01
    assert epsilon_step(s, False).current_ep == 0.0


def test_multilevel_w_cycle():
    s = initial_epsilon("MultiLevel2")
    levels = [s.current_level]
    eps = [s.current_ep]
    for _ in range(9):
        s = epsilon_step(s, False)
        levels.append(s.current_level)
        eps.append(s.current_ep)
    assert "".join(map(str, levels)) == "2101101221"
    assert eps[:3] == [1e-5, 1e-7, 0.0]
    s1 = initial_epsilon("MultiLevel1")
    for _ in range(8):
        assert s1.current_ep == 1e-4
        s1 = epsilon_step(s1, True)


def test_multilevel_restrict():
    g = groups_of([(d, 0.0) for d in range(1, 11)])
    assert multilevel_restrict(g, 2) == g
    assert [x.delta for x in multilevel_restrict(g, 0)] == [10]
    assert [x.delta for x in multilevel_restrict(g, 1)] == list(range(1, 10))


def test_multilevel_whole_groups():
    # 20 elements, quota 2, the largest group holds 3
    g = group_by_measure(list(range(20)), [1.0] * 17 + [2.0] * 3, [0.0] * 20)
    assert [x.delta for x in multilevel_restrict(g, 0)] == [2.0]
    assert [x.delta for x in multilevel_restrict(g, 1)] == [1.0]


# global bias


def test_global_bias_usual_is_identity():
    g = groups_of([(1, 0), (2, 1)])
    out, st_ = global_bias_filter(GlobalBiasState(), g, True)
    assert out == g and st_.phase == "Usual"


def test_global_bias_threshold_and_exit():
    g = groups_of([(1, 0), (2, 1), (3, 2), (4, 3)])
    s = GlobalBiasState(stagnation_counter=9)
    out, s = global_bias_filter(s, g, False)
    assert s.phase == "Global" and s.min_measure_threshold == 2.5
    assert [x.delta for x in out] == [3, 4]
    out, s = global_bias_filter(s, g, True)
    assert s.phase == "Usual" and out == g


def test_global_bias_cap():
    g = groups_of([(1, 0), (2, 1)])
    s = GlobalBiasState(phase="Global", min_measure_threshold=1.5)
    for _ in range(10):
        out, s = global_bias_filter(s, g, False)
        assert s.phase == "Global" and [x.delta for x in out] == [2]
    _, s = global_bias_filter(s, g, False)
    assert s.phase == "Usual"


# two-phase


def test_two_phase_toy():
    mids = [[0.5, 0.5], [0.8, 0.5], [0.5, 1.4]]
    out = two_phase_expand(set(), [0, 1, 2], [1.0, 1.0, 2.0], mids, [0.5, 0.5], "Original")
    assert out == {0, 2}
    items = [(0, 1.0, 0.0), (1, 1.0, 0.3), (2, 2.0, 0.9)]
    assert oracles.original_oracle(items, 0.0, "Off", 0.0) == {0, 2}


def test_two_phase_is_superset():
    mids = np.random.default_rng(0).uniform(size=(6, 2))
    out = two_phase_expand({3, 5}, list(range(6)), [1, 1, 2, 2, 3, 3], mids, mids[1], "Pareto")
    assert {3, 5} <= out and 1 in out


# properties

point_lists = st.lists(
    st.tuples(st.sampled_from([0.1, 0.25, 0.5, 0.7, 1.0, 1.5, 2.0]), st.floats(-5, 5, allow_nan=False)),
    min_size=1, max_size=20)


@settings(max_examples=200, deadline=None)
@given(point_lists)
def test_hull_within_front(points):
    g = groups_of(points)
    assert select_original(g, min(v for _, v in points), "Off", 0.0) <= select_pareto(g)


@settings(max_examples=200, deadline=None)
@given(point_lists)
def test_reduced_pareto_within_front(points):
    g = groups_of(points)
    red = select_reduced_pareto(g)
    assert len(red) <= 2 and red <= select_pareto(g)


@settings(max_examples=200, deadline=None)
@given(point_lists, st.sampled_from(["Original", "Aggressive", "Pareto", "RedPareto"]),
       st.sampled_from(["Min", "Median", "Average", "Off"]))
def test_selection_non_empty(points, strategy, refin):
    g = groups_of(points)
    vals = [v for _, v in points]
    out = select(strategy, g, min(vals), refin, 1e-4, float(np.median(vals)), float(np.mean(vals)))
    assert out


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=12, unique=True))
def test_aggressive_cardinality(values):
    g = groups_of([(1 + k % 4, v) for k, v in enumerate(values)])
    out = apply_equal_candidates(select_aggressive(g), g, "One")
    assert len(out) == len(g)


def test_pareto_matches_dominance_small():
    rng = random.Random(2)
    for _ in range(100):
        k = rng.randint(1, 12)
        items = [(i, rng.choice([0.5, 1.0, 2.0]), rng.choice([0.0, 0.5, 1.0, rng.random()])) for i in range(k)]
        g = group_by_measure([i for i, _, _ in items], [d for _, d, _ in items], [v for _, _, v in items])
        got = apply_equal_candidates(select_pareto(g), g, "All")
        assert got == oracles.pareto_oracle(items)


def test_measure_group_accessors():
    g = MeasureGroup(1.0, (5, 2), (0.1, 0.3), 2)
    assert g.best == 0.1 and g.rep == 5
