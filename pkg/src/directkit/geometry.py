"""Partition cells, domain scaling and the seven sampling/subdivision schemes.

All cell geometry lives in the unit hyper-cube and is kept in exact rational
arithmetic (``fractions.Fraction``).  Repeated bisection and trisection only
ever produce denominators of the form ``2**p * 3**q``, so corners, sample
points and volumes stay exact; floats appear only when a point is handed to
the objective or used as a cache key.

Scheme names follow the usual DIRECT-family shorthand:

========  ==========================================================
DTC       trisection, sample at box centers
DTDV      trisection, sample two opposite vertices of a main diagonal
DTCS      simplicial trisection, sample simplex centroids
DBVS      simplicial bisection, sample simplex vertices
DBDP      bisection, sample two points at 1/3 and 2/3 of a diagonal
DBVD      bisection, sample one vertex and the point 2/3 along the
          diagonal away from it
DBC       bisection, sample box centers (inherited points kept)
========  ==========================================================
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

SCHEMES = ("DTC", "DTDV", "DTCS", "DBVS", "DBDP", "DBVD", "DBC")
SIDE_RULES = ("All", "One")
BOX_SCHEMES = frozenset({"DTC", "DTDV", "DBDP", "DBVD", "DBC"})
SIMPLEX_SCHEMES = frozenset({"DTCS", "DBVS"})
# schemes whose sample set contains the cell midpoint
MIDPOINT_SCHEMES = frozenset({"DTC", "DTCS", "DBC"})

# n! simplices are created up front; beyond this the initial triangulation
# alone would exhaust any reasonable budget
MAX_SIMPLEX_DIM = 8

CACHE_DIGITS = 12

ZERO = Fraction(0)
ONE = Fraction(1)
HALF = Fraction(1, 2)
THIRD = Fraction(1, 3)
TWO_THIRDS = Fraction(2, 3)

Point = tuple  # tuple[Fraction, ...]


class ObjectiveError(ValueError):
    """The objective returned a non-finite value."""


@dataclass(frozen=True)
class DomainScaler:
    """Affine map between the box ``[a, b]`` and the unit cube."""

    a: np.ndarray
    b: np.ndarray

    @property
    def n(self) -> int:
        return len(self.a)

    def to_original(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.abs(self.b - self.a) * u + self.a

    def to_unit(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x - self.a) / (self.b - self.a)


def make_scaler(a, b) -> DomainScaler:
    a = np.array(a, dtype=float).reshape(-1)
    b = np.array(b, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"bound dimension mismatch: {a.size} lower vs {b.size} upper")
    if a.size == 0:
        raise ValueError("bounds must have at least one dimension")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("bounds must be finite")
    bad = np.flatnonzero(~(a < b))
    if bad.size:
        j = int(bad[0])
        raise ValueError(f"need a_j < b_j, got a[{j}]={a[j]} and b[{j}]={b[j]}")
    a.setflags(write=False)
    b.setflags(write=False)
    return DomainScaler(a, b)


def as_float(point: Point) -> np.ndarray:
    return np.array([float(c) for c in point])


def cache_key(point: Point) -> tuple:
    return tuple(round(float(c), CACHE_DIGITS) for c in point)


class EvalCache:
    """Objective wrapper that evaluates each (quantized) unit point once.

    ``func`` receives a float numpy array in unit coordinates.  ``evaluations``
    counts true objective calls only; ``points``/``values`` keep them in call
    order and double as the sample archive used by clustering hybrids.
    """

    def __init__(self, func: Callable[[np.ndarray], float]):
        self._func = func
        self._table: dict[tuple, float] = {}
        self.points: list[np.ndarray] = []
        self.values: list[float] = []
        # exact rational coordinates of each evaluated point, in call order
        self.exact: list[Point] = []

    @property
    def evaluations(self) -> int:
        return len(self.values)

    def __contains__(self, point: Point) -> bool:
        return cache_key(point) in self._table

    def __call__(self, point: Point) -> float:
        key = cache_key(point)
        value = self._table.get(key)
        if value is None:
            x = as_float(point)
            value = float(self._func(x))
            if not math.isfinite(value):
                raise ObjectiveError(f"objective returned {value} at unit point {x.tolist()}")
            self._table[key] = value
            self.points.append(x)
            self.values.append(value)
            self.exact.append(tuple(point))
        return value


@dataclass(eq=False)
class Element:
    """One partition cell.

    Boxes use ``lower``/``upper``; simplices use ``vertices`` as
    ``(vertex_id, point)`` pairs.  ``anchor`` carries the scheme-specific
    construction data: the center for DTC/DBC, the centroid for DTCS, the
    diagonal endpoints ``(s, t)`` for DTDV/DBDP and ``(vertex, opposite)``
    for DBVD.  ``delta`` and ``aggr`` are filled in by the selection layer.
    """

    id: int
    samples: tuple
    lower: Point | None = None
    upper: Point | None = None
    vertices: tuple | None = None
    anchor: tuple = ()
    delta: float | None = None
    aggr: float | None = None
    # (squared length, low vertex, high vertex) of the longest simplex edge
    edge: tuple | None = field(default=None, repr=False)

    @property
    def is_box(self) -> bool:
        return self.lower is not None

    @property
    def n(self) -> int:
        return len(self.lower) if self.is_box else len(self.vertices) - 1

    def sides(self) -> tuple:
        return tuple(u - l for l, u in zip(self.lower, self.upper))

    def sample_points(self) -> list:
        return [p for p, _ in self.samples]

    def sample_values(self) -> list:
        return [v for _, v in self.samples]

    def midpoint_value(self) -> float | None:
        """Objective value at the cell midpoint if it is one of the samples."""
        if len(self.anchor) == 1 and self.samples[0][0] == self.anchor[0]:
            return self.samples[0][1]
        mid = element_midpoint(self)
        for p, v in self.samples:
            if p == mid:
                return v
        return None


def element_midpoint(element: Element) -> Point:
    if element.is_box:
        return tuple((l + u) / 2 for l, u in zip(element.lower, element.upper))
    pts = [p for _, p in element.vertices]
    k = len(pts)
    return tuple(sum(c) / k for c in zip(*pts))


def _sq_dist(p: Point, q: Point) -> Fraction:
    return sum(((x - y) ** 2 for x, y in zip(p, q)), ZERO)


def longest_edge(element: Element) -> tuple:
    """Vertex pair ``((id, point), (id, point))`` spanning the longest edge.

    Ties go to the lexicographically smallest ``(id_low, id_high)`` pair.
    """
    sq, lo, hi = longest_edge_data(element)
    if sq == 0:
        raise ValueError(f"element {element.id} has zero volume")
    return lo, hi


def longest_edge_data(element: Element) -> tuple:
    """``(squared length, low vertex, high vertex)``, computed once per cell.

    Coordinates are brought to a common denominator so the pairwise
    distances are plain integer arithmetic.
    """
    if element.edge is None:
        verts = element.vertices
        den = math.lcm(*(c.denominator for _, p in verts for c in p))
        ints = [[c.numerator * (den // c.denominator) for c in p] for _, p in verts]
        best = None
        for (a, (ia, pa)), (b, (ib, pb)) in itertools.combinations(enumerate(verts), 2):
            d = sum((x - y) * (x - y) for x, y in zip(ints[a], ints[b]))
            lo, hi = ((ia, pa), (ib, pb)) if ia < ib else ((ib, pb), (ia, pa))
            key = (-d, lo[0], hi[0])
            if best is None or key < best[0]:
                best = (key, lo, hi)
        element.edge = (Fraction(-best[0][0], den * den), best[1], best[2])
    return element.edge


def longest_sides(element: Element, side_rule: str = "All"):
    """Dimensions to split (boxes) or the edge to split (simplices).

    Boxes: every dimension attaining the maximum side length in ascending
    index order (``side_rule="All"``) or only the lowest such index
    (``"One"``).  The evaluation-dependent ordering used by DTC happens at
    subdivision time.  Simplices always return their single longest edge.
    """
    if not element.is_box:
        return longest_edge(element)
    sides = element.sides()
    longest = max(sides)
    if longest == 0:
        raise ValueError(f"element {element.id} has zero volume")
    dims = [j for j, s in enumerate(sides) if s == longest]
    return dims if side_rule == "All" else dims[:1]


def cell_volume(element: Element) -> Fraction:
    if element.is_box:
        return math.prod(element.sides(), start=ONE)
    pts = [p for _, p in element.vertices]
    rows = [[x - y for x, y in zip(p, pts[0])] for p in pts[1:]]
    return abs(_det(rows)) / math.factorial(len(rows))


def _det(rows: list) -> Fraction:
    m = [list(r) for r in rows]
    n = len(m)
    det = ONE
    for c in range(n):
        pivot = next((r for r in range(c, n) if m[r][c] != 0), None)
        if pivot is None:
            return ZERO
        if pivot != c:
            m[c], m[pivot] = m[pivot], m[c]
            det = -det
        det *= m[c][c]
        for r in range(c + 1, n):
            factor = m[r][c] / m[c][c]
            if factor:
                for k in range(c, n):
                    m[r][k] -= factor * m[c][k]
    return det


def _with(point: Point, j: int, value: Fraction) -> Point:
    return point[:j] + (value,) + point[j + 1:]


def _lerp(p: Point, q: Point, t: Fraction) -> Point:
    return tuple(x + t * (y - x) for x, y in zip(p, q))


def _in_box(point: Point, lower: Point, upper: Point) -> bool:
    return all(l <= c <= u for c, l, u in zip(point, lower, upper))


@dataclass
class Partition:
    """Live set of cells plus the shared evaluation cache."""

    scheme: str
    n: int
    cache: EvalCache
    side_rule: str = "All"
    elements: dict = field(default_factory=dict)
    vertex_table: dict = field(default_factory=dict)
    _vertex_ids: dict = field(default_factory=dict, repr=False)
    _next_id: int = 0

    def vertex_id(self, point: Point) -> int:
        vid = self._vertex_ids.get(point)
        if vid is None:
            vid = len(self.vertex_table)
            self.vertex_table[vid] = point
            self._vertex_ids[point] = vid
        return vid

    def add(self, **kwargs) -> Element:
        el = Element(id=self._next_id, **kwargs)
        self._next_id += 1
        self.elements[el.id] = el
        return el

    def sample(self, point: Point) -> tuple:
        return point, self.cache(point)

    def total_volume(self) -> Fraction:
        return sum((cell_volume(e) for e in self.elements.values()), ZERO)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements.values())


def _unit_corner(n: int, value: Fraction) -> Point:
    return (value,) * n


def init_partition(scheme: str, n: int, func, side_rule: str = "All"):
    """Build the initial partition of the unit cube and evaluate its samples.

    ``func`` is either an :class:`EvalCache` or a callable on unit points.
    Returns ``(partition, [(point, value), ...])`` listing the evaluations in
    the order they were made.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown partitioning scheme {scheme!r}; expected one of {SCHEMES}")
    if side_rule not in SIDE_RULES:
        raise ValueError(f"unknown side rule {side_rule!r}; expected one of {SIDE_RULES}")
    if n < 1:
        raise ValueError("dimension must be at least 1")
    if scheme in SIMPLEX_SCHEMES and n > MAX_SIMPLEX_DIM:
        raise ValueError(
            f"{scheme} starts from n! = {math.factorial(n)} simplices; supported up to n={MAX_SIMPLEX_DIM}"
        )
    cache = func if isinstance(func, EvalCache) else EvalCache(func)
    start = cache.evaluations
    part = Partition(scheme=scheme, n=n, cache=cache, side_rule=side_rule)
    lower, upper = _unit_corner(n, ZERO), _unit_corner(n, ONE)

    if scheme in ("DTC", "DBC"):
        center = _unit_corner(n, HALF)
        part.add(lower=lower, upper=upper, samples=(part.sample(center),), anchor=(center,))
    elif scheme == "DTDV":
        part.add(lower=lower, upper=upper, samples=(part.sample(lower), part.sample(upper)), anchor=(lower, upper))
    elif scheme == "DBDP":
        p, q = _unit_corner(n, THIRD), _unit_corner(n, TWO_THIRDS)
        part.add(lower=lower, upper=upper, samples=(part.sample(p), part.sample(q)), anchor=(lower, upper))
    elif scheme == "DBVD":
        d = _unit_corner(n, THIRD)
        part.add(lower=lower, upper=upper, samples=(part.sample(upper), part.sample(d)), anchor=(upper, lower))
    else:
        corners = [tuple(Fraction(c) for c in bits) for bits in itertools.product((0, 1), repeat=n)]
        for c in corners:
            part.vertex_id(c)
        if scheme == "DBVS":
            for c in corners:
                cache(c)
        for perm in itertools.permutations(range(n)):
            cur = list(lower)
            verts = [lower]
            for d in perm:
                cur[d] = ONE
                verts.append(tuple(cur))
            _add_simplex(part, [(part.vertex_id(v), v) for v in verts])

    evaluated = list(zip(cache.exact[start:], cache.values[start:]))
    return part, evaluated


def _add_simplex(part: Partition, vertices: list) -> Element:
    if part.scheme == "DTCS":
        pts = [p for _, p in vertices]
        centroid = tuple(sum(c) / len(pts) for c in zip(*pts))
        samples = (part.sample(centroid),)
        anchor = (centroid,)
    else:
        samples = tuple(part.sample(p) for _, p in vertices)
        anchor = ()
    return part.add(vertices=tuple(vertices), samples=samples, anchor=anchor)


def subdivide(part: Partition, element_id: int) -> list:
    """Replace one cell by its children; returns the child ids.

    New sample points go through the shared cache, so points inherited from
    the parent or shared with neighbours are never re-evaluated.  The
    operation is atomic: the evaluation budget is checked by the caller
    between elements.
    """
    try:
        el = part.elements[element_id]
    except KeyError:
        raise KeyError(f"no element with id {element_id}") from None
    splitter = _SPLITTERS[part.scheme]
    children = splitter(part, el)
    del part.elements[element_id]
    return [c.id for c in children]


def _split_dtc(part: Partition, el: Element) -> list:
    dims = longest_sides(el, part.side_rule)
    (center,) = el.anchor
    h = el.upper[dims[0]] - el.lower[dims[0]]
    step = h / 3
    probes = {}
    for j in dims:
        minus = _with(center, j, center[j] - step)
        plus = _with(center, j, center[j] + step)
        probes[j] = (part.sample(minus), part.sample(plus))
    # Jones order: best probe value first, ties by dimension index
    order = sorted(dims, key=lambda j: (min(probes[j][0][1], probes[j][1][1]), j))
    lower, upper = list(el.lower), list(el.upper)
    children = []
    for j in order:
        lo, up = lower[j], upper[j]
        left_up = list(upper)
        left_up[j] = lo + step
        right_lo = list(lower)
        right_lo[j] = up - step
        minus, plus = probes[j]
        children.append(part.add(lower=tuple(lower), upper=tuple(left_up), samples=(minus,), anchor=(minus[0],)))
        children.append(part.add(lower=tuple(right_lo), upper=tuple(upper), samples=(plus,), anchor=(plus[0],)))
        lower[j], upper[j] = lo + step, up - step
    children.append(part.add(lower=tuple(lower), upper=tuple(upper), samples=el.samples, anchor=el.anchor))
    return children


def _split_dtdv(part: Partition, el: Element) -> list:
    dims = longest_sides(el, part.side_rule)
    children = []
    lower, upper, (s, t) = el.lower, el.upper, el.anchor
    for k, j in enumerate(dims):
        lo, h = lower[j], upper[j] - lower[j]
        low_end, high_end = (s, t) if s[j] == lo else (t, s)
        p1 = _with(high_end, j, lo + h / 3)
        p2 = _with(low_end, j, lo + 2 * h / 3)
        v_low, v1, v2, v_high = (part.sample(p) for p in (low_end, p1, p2, high_end))
        cuts = (lo, lo + h / 3, lo + 2 * h / 3, upper[j])
        pairs = ((v_low, v1), (v1, v2), (v2, v_high))
        boxes = [(_with(lower, j, cuts[i]), _with(upper, j, cuts[i + 1])) for i in range(3)]
        last = k == len(dims) - 1
        for i in (0, 2, 1) if not last else (0, 1, 2):
            if i == 1 and not last:
                continue
            a, b = pairs[i]
            children.append(part.add(lower=boxes[i][0], upper=boxes[i][1], samples=(a, b), anchor=(a[0], b[0])))
        if not last:
            lower, upper = boxes[1]
            s, t = p1, p2
    return children


def _bisect_all(part: Partition, el: Element, split_one) -> list:
    """Bisect along every selected dimension, applying ``split_one`` to each
    intermediate cell (full product, ascending dimension order)."""
    dims = longest_sides(el, part.side_rule)
    current = [(el.lower, el.upper, el.anchor, el.samples)]
    for j in dims:
        nxt = []
        for cell in current:
            nxt.extend(split_one(part, cell, j))
        current = nxt
    return [part.add(lower=lo, upper=up, samples=smp, anchor=anc) for lo, up, anc, smp in current]


def _dbdp_one(part: Partition, cell, j: int) -> list:
    lower, upper, (s, t), _ = cell
    mid = (lower[j] + upper[j]) / 2
    # the half adjacent to s keeps the point nearest s; the other half keeps the one nearest t
    s_half = (lower, _with(upper, j, mid)) if s[j] == lower[j] else (_with(lower, j, mid), upper)
    t_half = (_with(lower, j, mid), upper) if s[j] == lower[j] else (lower, _with(upper, j, mid))
    out = []
    for (lo, up), (s2, t2) in (
        (s_half, (_with(s, j, mid), _with(t, j, s[j]))),
        (t_half, (_with(s, j, t[j]), _with(t, j, mid))),
    ):
        samples = (part.sample(_lerp(s2, t2, THIRD)), part.sample(_lerp(s2, t2, TWO_THIRDS)))
        out.append((lo, up, (s2, t2), samples))
    return out


def _dbvd_one(part: Partition, cell, j: int) -> list:
    lower, upper, (v, o), _ = cell
    mid = (lower[j] + upper[j]) / 2
    v_half = (lower, _with(upper, j, mid)) if v[j] == lower[j] else (_with(lower, j, mid), upper)
    o_half = (_with(lower, j, mid), upper) if v[j] == lower[j] else (lower, _with(upper, j, mid))
    out = []
    for (lo, up), (v2, o2) in (
        (v_half, (v, _with(o, j, mid))),
        (o_half, (_with(v, j, o[j]), _with(o, j, mid))),
    ):
        samples = (part.sample(v2), part.sample(_lerp(v2, o2, TWO_THIRDS)))
        out.append((lo, up, (v2, o2), samples))
    return out


def _dbc_one(part: Partition, cell, j: int) -> list:
    lower, upper, _, samples = cell
    mid = (lower[j] + upper[j]) / 2
    out = []
    for lo, up in ((lower, _with(upper, j, mid)), (_with(lower, j, mid), upper)):
        center = tuple((a + b) / 2 for a, b in zip(lo, up))
        own = part.sample(center)
        inherited = tuple(sp for sp in samples if _in_box(sp[0], lo, up) and sp[0] != center)
        out.append((lo, up, (center,), (own,) + inherited))
    return out


def _split_dbdp(part, el):
    return _bisect_all(part, el, _dbdp_one)


def _split_dbvd(part, el):
    return _bisect_all(part, el, _dbvd_one)


def _split_dbc(part, el):
    return _bisect_all(part, el, _dbc_one)


def _split_dtcs(part: Partition, el: Element) -> list:
    (ia, a), (ib, b) = longest_edge(el)
    p, q = _lerp(a, b, THIRD), _lerp(a, b, TWO_THIRDS)
    vp, vq = (part.vertex_id(p), p), (part.vertex_id(q), q)
    return [
        _add_simplex(part, _replace(el.vertices, {ib: vp})),
        _add_simplex(part, _replace(el.vertices, {ia: vp, ib: vq})),
        _add_simplex(part, _replace(el.vertices, {ia: vq})),
    ]


def _split_dbvs(part: Partition, el: Element) -> list:
    (ia, a), (ib, b) = longest_edge(el)
    c = _lerp(a, b, HALF)
    vc = (part.vertex_id(c), c)
    return [
        _add_simplex(part, _replace(el.vertices, {ib: vc})),
        _add_simplex(part, _replace(el.vertices, {ia: vc})),
    ]


def _replace(vertices: Sequence, mapping: dict) -> list:
    return [mapping.get(vid, (vid, p)) for vid, p in vertices]


_SPLITTERS = {
    "DTC": _split_dtc,
    "DTDV": _split_dtdv,
    "DTCS": _split_dtcs,
    "DBVS": _split_dbvs,
    "DBDP": _split_dbdp,
    "DBVD": _split_dbvd,
    "DBC": _split_dbc,
}
