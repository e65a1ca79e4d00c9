import itertools
import math
import random
from fractions import Fraction as F

import numpy as np
import pytest

from directkit.geometry import (SCHEMES, EvalCache, ObjectiveError, cell_volume, element_midpoint, init_partition,
                                longest_sides, make_scaler, subdivide)
from directkit.selection import squared_size

from replay import TABLE, replay


def quad(x):
    return float(np.sum((x - 0.37) ** 2))


# scaler


def test_scaler_midpoint_of_interval():
    s = make_scaler([0], [10])
    assert s.to_original([0.5]).tolist() == [5.0]


def test_scaler_corners_map_to_corners():
    s = make_scaler([-1, -1], [1, 1])
    assert s.to_original([0, 1]).tolist() == [-1.0, 1.0]
    assert s.to_unit([-1.0, 1.0]).tolist() == [0.0, 1.0]


@pytest.mark.parametrize("a,b", [([2], [2]), ([3], [1]), ([0, 0], [1]), ([0], [np.inf]), ([np.nan], [1])])
def test_scaler_rejects_bad_bounds(a, b):
    with pytest.raises(ValueError):
        make_scaler(a, b)


def test_scaler_round_trip():
    rng = np.random.default_rng(3)
    a = rng.uniform(-10, 0, 4)
    b = a + rng.uniform(0.1, 5, 4)
    s = make_scaler(a, b)
    u = rng.uniform(0, 1, 4)
    assert np.allclose(s.to_unit(s.to_original(u)), u)


# initialization


def test_init_dtc_single_center():
    part, ev = init_partition("DTC", 2, quad)
    assert len(part) == 1
    assert [p for p, _ in ev] == [(F(1, 2), F(1, 2))]


def test_init_dbdp_diagonal_points():
    _, ev = init_partition("DBDP", 2, quad)
    assert {p for p, _ in ev} == {(F(1, 3), F(1, 3)), (F(2, 3), F(2, 3))}


def test_init_dtcs_centroids():
    part, ev = init_partition("DTCS", 2, quad)
    assert len(part) == 2
    assert {p for p, _ in ev} == {(F(2, 3), F(1, 3)), (F(1, 3), F(2, 3))}


def test_init_dbvs_n3_counts():
    part, ev = init_partition("DBVS", 3, quad)
    assert len(part) == 6
    assert len(ev) == 8


@pytest.mark.parametrize("scheme", SCHEMES)
def test_init_covers_unit_cube(scheme):
    for n in (1, 2, 3, 4):
        part, _ = init_partition(scheme, n, quad)
        assert part.total_volume() == 1


def test_init_rejects_bad_input():
    with pytest.raises(ValueError):
        init_partition("DTC", 0, quad)
    with pytest.raises(ValueError):
        init_partition("XYZ", 2, quad)


# longest sides


def _box(part, lo, up):
    return part.add(lower=tuple(map(F, lo)), upper=tuple(map(F, up)), samples=(), anchor=())


def test_longest_sides_unique():
    part, _ = init_partition("DTC", 2, quad)
    el = _box(part, (0, 0), (1, F(1, 3)))
    assert longest_sides(el, "All") == [0]


def test_longest_sides_tied_all_and_one():
    part, _ = init_partition("DTC", 2, quad)
    el = part.elements[0]
    assert longest_sides(el, "All") == [0, 1]
    assert longest_sides(el, "One") == [0]


def test_longest_edge_of_simplex():
    part, _ = init_partition("DTCS", 2, quad)
    el = next(e for e in part if {p for _, p in e.vertices} == {(0, 0), (0, 1), (1, 1)})
    (_, a), (_, b) = longest_sides(el)
    assert {a, b} == {(0, 0), (1, 1)}


def test_longest_sides_zero_volume():
    part, _ = init_partition("DTC", 2, quad)
    el = _box(part, (0, 0), (0, 0))
    with pytest.raises(ValueError):
        longest_sides(el)


# subdivision, the per-scheme examples


def _first_step(scheme, side_rule="One"):
    cache = EvalCache(quad)
    part, _ = init_partition(scheme, 2, cache, side_rule)
    before = cache.evaluations
    eid = 0 if scheme not in ("DTCS", "DBVS") else next(
        e.id for e in part if {p for _, p in e.vertices} == {(0, 0), (0, 1), (1, 1)})
    kids = subdivide(part, eid)
    return part, kids, set(cache.exact[before:])


def test_dtdv_children_diagonal_pairs():
    part, kids, new = _first_step("DTDV")
    assert new == {(F(1, 3), F(1)), (F(2, 3), F(0))}
    pairs = {frozenset(part.elements[k].sample_points()) for k in kids}
    want = [((0, 0), (F(1, 3), 1)), ((F(1, 3), 1), (F(2, 3), 0)), ((F(2, 3), 0), (1, 1))]
    assert pairs == {frozenset(tuple(map(F, p)) for p in pr) for pr in want}


def test_dtc_middle_child_inherits_center():
    part, kids, new = _first_step("DTC")
    mid = [part.elements[k] for k in kids if (F(1, 2), F(1, 2)) in part.elements[k].sample_points()]
    assert len(mid) == 1 and len(new) == 2


def test_dbc_children_inherit_parent_center():
    part, kids, new = _first_step("DBC")
    assert new == {(F(1, 4), F(1, 2)), (F(3, 4), F(1, 2))}
    for k in kids:
        assert (F(1, 2), F(1, 2)) in part.elements[k].sample_points()


def test_dbvs_midpoint_evaluated_once():
    _, kids, new = _first_step("DBVS")
    assert len(kids) == 2
    assert new == {(F(1, 2), F(1, 2))}


def test_subdivide_unknown_id():
    part, _ = init_partition("DTC", 2, quad)
    with pytest.raises(KeyError):
        subdivide(part, 99)


@pytest.mark.parametrize("scheme", sorted(TABLE))
def test_two_iteration_replay(scheme):
    initial, steps, _ = replay(scheme)
    want_init, iters = TABLE[scheme]
    assert set(initial) == want_init and len(initial) == len(want_init)
    for got, (_, want) in zip(steps, iters):
        assert set(got) == want
        assert len(got) == len(want)


# midpoints


def test_midpoint_box_and_simplex():
    part, _ = init_partition("DTCS", 2, quad)
    el = next(e for e in part if {p for _, p in e.vertices} == {(0, 0), (0, 1), (1, 1)})
    assert element_midpoint(el) == (F(1, 3), F(2, 3))
    bpart, _ = init_partition("DTC", 2, quad)
    assert element_midpoint(bpart.elements[0]) == (F(1, 2), F(1, 2))
    assert element_midpoint(_box(bpart, (F(2, 3), F(1, 3)), (1, F(2, 3)))) == (F(5, 6), F(1, 2))


# cache


def test_cache_evaluates_each_point_once():
    calls = []

    def f(x):
        calls.append(tuple(x))
        return float(x.sum())

    c = EvalCache(f)
    p = (F(1, 3), F(2, 3))
    assert c(p) == c(p) == 1.0
    assert len(calls) == 1 and c.evaluations == 1 and p in c


def test_cache_rejects_non_finite():
    c = EvalCache(lambda x: math.nan)
    with pytest.raises(ObjectiveError):
        c((F(0),))


# randomized invariants


def _random_walk(scheme, n, side_rule, steps, rng):
    """Subdivide ``steps`` random cells, checking tiling at every split."""
    cache = EvalCache(quad)
    part, _ = init_partition(scheme, n, cache, side_rule)
    refs = sum(len(e.samples) for e in part)
    for _ in range(steps):
        eid = rng.choice(sorted(part.elements))
        parent = part.elements[eid]
        pvol = cell_volume(parent)
        psize = squared_size(parent, "Diagonal")
        kids = [part.elements[k] for k in subdivide(part, eid)]
        refs += sum(len(k.samples) for k in kids)
        assert sum(cell_volume(k) for k in kids) == pvol
        assert all(cell_volume(k) > 0 for k in kids)
        for k in kids:
            assert squared_size(k, "Diagonal") <= psize
        if parent.is_box:
            for a, b in itertools.combinations(kids, 2):
                # open boxes are disjoint iff some axis has no interior overlap
                assert any(min(a.upper[j], b.upper[j]) <= max(a.lower[j], b.lower[j]) for j in range(n))
                assert all(parent.lower[j] <= a.lower[j] and a.upper[j] <= parent.upper[j] for j in range(n))
        else:
            _check_simplex_tiling(parent, kids, rng)
    return part, cache, refs


def _barycentric(vertices, x):
    pts = [p for _, p in vertices]
    n = len(x)
    m = [[pts[i + 1][r] - pts[0][r] for i in range(n)] + [x[r] - pts[0][r]] for r in range(n)]
    for c in range(n):
        piv = next(r for r in range(c, n) if m[r][c] != 0)
        m[c], m[piv] = m[piv], m[c]
        for r in range(n):
            if r != c and m[r][c] != 0:
                f = m[r][c] / m[c][c]
                m[r] = [a - f * b for a, b in zip(m[r], m[c])]
    lam = [m[r][n] / m[r][r] for r in range(n)]
    return [1 - sum(lam)] + lam


def _check_simplex_tiling(parent, kids, rng):
    for k in kids:
        for _, p in k.vertices:
            assert min(_barycentric(parent.vertices, p)) >= 0
    for _ in range(5):
        w = [F(rng.randint(1, 97)) for _ in parent.vertices]
        s = sum(w)
        x = tuple(sum(wi * p[j] for wi, (_, p) in zip(w, parent.vertices)) / s for j in range(len(w) - 1))
        inside = [k for k in kids if min(_barycentric(k.vertices, x)) > 0]
        closed = [k for k in kids if min(_barycentric(k.vertices, x)) >= 0]
        assert len(inside) <= 1 and closed


def test_volume_conservation_fuzz():
    rng = random.Random(11)
    cases = 0
    for scheme in SCHEMES:
        for n in (1, 2, 3, 5):
            for side in ("All", "One"):
                for _ in range(2):
                    part, _, _ = _random_walk(scheme, n, side, rng.randint(1, 12), rng)
                    assert abs(float(part.total_volume()) - 1.0) <= 1e-9
                    assert part.total_volume() == 1
                    cases += 1
    assert cases >= 112
    for _ in range(200 - cases):
        scheme, n, side = rng.choice(SCHEMES), rng.choice((1, 2, 3)), rng.choice(("All", "One"))
        part, _, _ = _random_walk(scheme, n, side, rng.randint(1, 12), rng)
        assert part.total_volume() == 1


@pytest.mark.parametrize("scheme", ["DTDV", "DBVS"])
def test_cache_economy(scheme):
    rng = random.Random(5)
    part, cache, refs = _random_walk(scheme, 2, "All", 0, rng)
    for _ in range(10):
        # one iteration: split every cell of the largest size
        top = max(cell_volume(e) for e in part)
        for eid in sorted(e.id for e in part if cell_volume(e) == top):
            kids = subdivide(part, eid)
            refs += sum(len(part.elements[k].samples) for k in kids)
    assert cache.evaluations < refs
