"""Built-in box-constrained test problems and the random shift transform.

Every problem records a known minimizer and optimum; registration checks
f(x*) = f* to 1e-9.  Scalable problems are instantiated at any n >= 2 and
fixed-dimension ones only at their own n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .engine import OptProblem

PRNG_NAME = "numpy.random.MT19937"
SHIFT_RATE_MAX = 0.1
OPT_TOL = 1e-9
TAGS = ("separable", "multimodal", "scalable")


def sphere(x):
    return float(np.dot(x, x))


def branin(x):
    x1, x2 = x
    return float((x2 - 5.1 / (4 * math.pi ** 2) * x1 ** 2 + 5 / math.pi * x1 - 6) ** 2
                 + 10 * (1 - 1 / (8 * math.pi)) * math.cos(x1) + 10)


def six_hump_camel(x):
    x1, x2 = x
    return float((4 - 2.1 * x1 ** 2 + x1 ** 4 / 3) * x1 ** 2 + x1 * x2 + (-4 + 4 * x2 ** 2) * x2 ** 2)


def goldstein_price(x):
    x1, x2 = x
    a = 1 + (x1 + x2 + 1) ** 2 * (19 - 14 * x1 + 3 * x1 ** 2 - 14 * x2 + 6 * x1 * x2 + 3 * x2 ** 2)
    b = 30 + (2 * x1 - 3 * x2) ** 2 * (18 - 32 * x1 + 12 * x1 ** 2 + 48 * x2 - 36 * x1 * x2 + 27 * x2 ** 2)
    return float(a * b)


def rosenbrock(x):
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1 - x[:-1]) ** 2))


def rastrigin(x):
    return float(10 * x.size + np.sum(x ** 2 - 10 * np.cos(2 * np.pi * x)))


def ackley(x):
    n = x.size
    s1 = math.sqrt(float(np.dot(x, x)) / n)
    s2 = float(np.sum(np.cos(2 * np.pi * x))) / n
    return max(0.0, -20 * math.exp(-0.2 * s1) - math.exp(s2) + 20 + math.e)


def griewank(x):
    i = np.arange(1, x.size + 1)
    return float(np.sum(x ** 2) / 4000 - np.prod(np.cos(x / np.sqrt(i))) + 1)


def levy(x):
    w = 1 + (x - 1) / 4
    head = math.sin(math.pi * w[0]) ** 2
    mid = np.sum((w[:-1] - 1) ** 2 * (1 + 10 * np.sin(np.pi * w[:-1] + 1) ** 2))
    tail = (w[-1] - 1) ** 2 * (1 + math.sin(2 * math.pi * w[-1]) ** 2)
    return float(head + mid + tail)


SCHWEFEL_C = 418.982887272433799807913601398
SCHWEFEL_X = 420.968746227503


def schwefel(x):
    return float(SCHWEFEL_C * x.size - np.sum(x * np.sin(np.sqrt(np.abs(x)))))


def zakharov(x):
    i = np.arange(1, x.size + 1)
    s = float(np.dot(0.5 * i, x))
    return float(np.dot(x, x)) + s ** 2 + s ** 4


STYBLINSKI_X = -2.903534027771177


def styblinski_tang(x):
    return float(0.5 * np.sum(x ** 4 - 16 * x ** 2 + 5 * x))


def easom(x):
    x1, x2 = x
    return float(-math.cos(x1) * math.cos(x2) * math.exp(-((x1 - math.pi) ** 2 + (x2 - math.pi) ** 2)))


def booth(x):
    x1, x2 = x
    return float((x1 + 2 * x2 - 7) ** 2 + (2 * x1 + x2 - 5) ** 2)


def matyas(x):
    x1, x2 = x
    return float(0.26 * (x1 ** 2 + x2 ** 2) - 0.48 * x1 * x2)


def michalewicz(x):
    i = np.arange(1, x.size + 1)
    return float(-np.sum(np.sin(x) * np.sin(i * x ** 2 / np.pi) ** 20))


def bohachevsky(x):
    x1, x2 = x
    return float(x1 ** 2 + 2 * x2 ** 2 - 0.3 * math.cos(3 * math.pi * x1) - 0.4 * math.cos(4 * math.pi * x2) + 0.7)


_SHEKEL_A = np.array([[4.0, 4, 4, 4], [1, 1, 1, 1], [8, 8, 8, 8], [6, 6, 6, 6], [3, 7, 3, 7]])
_SHEKEL_C = np.array([0.1, 0.2, 0.2, 0.4, 0.4])


def shekel5(x):
    d = np.sum((x - _SHEKEL_A) ** 2, axis=1) + _SHEKEL_C
    return float(-np.sum(1.0 / d))


_H3_A = np.array([[3.0, 10, 30], [0.1, 10, 35], [3, 10, 30], [0.1, 10, 35]])
_H3_P = 1e-4 * np.array([[3689, 1170, 2673], [4699, 4387, 7470], [1091, 8732, 5547], [381, 5743, 8828]])
_H6_A = np.array([[10, 3, 17, 3.5, 1.7, 8], [0.05, 10, 17, 0.1, 8, 14],
                  [3, 3.5, 1.7, 10, 17, 8], [17, 8, 0.05, 10, 0.1, 14]])
_H6_P = 1e-4 * np.array([[1312, 1696, 5569, 124, 8283, 5886], [2329, 4135, 8307, 3736, 1004, 9991],
                         [2348, 1451, 3522, 2883, 3047, 6650], [4047, 8828, 8732, 5743, 1091, 381]])
_H_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])


def hartman3(x):
    return float(-np.dot(_H_ALPHA, np.exp(-np.sum(_H3_A * (x - _H3_P) ** 2, axis=1))))


def hartman6(x):
    return float(-np.dot(_H_ALPHA, np.exp(-np.sum(_H6_A * (x - _H6_P) ** 2, axis=1))))


def beale(x):
    x1, x2 = x
    return float((1.5 - x1 + x1 * x2) ** 2 + (2.25 - x1 + x1 * x2 ** 2) ** 2 + (2.625 - x1 + x1 * x2 ** 3) ** 2)


def three_hump_camel(x):
    x1, x2 = x
    return float(2 * x1 ** 2 - 1.05 * x1 ** 4 + x1 ** 6 / 6 + x1 * x2 + x2 ** 2)


def dixon_price(x):
    i = np.arange(2, x.size + 1)
    return float((x[0] - 1) ** 2 + np.sum(i * (2 * x[1:] ** 2 - x[:-1]) ** 2))


def trid(x):
    return float(np.sum((x - 1) ** 2) - np.sum(x[1:] * x[:-1]))


def mccormick(x):
    x1, x2 = x
    return float(math.sin(x1 + x2) + (x1 - x2) ** 2 - 1.5 * x1 + 2.5 * x2 + 1)


def shubert(x):
    j = np.arange(1, 6)
    return float(np.prod([np.sum(j * np.cos((j + 1) * xi + j)) for xi in x]))


# Michalewicz (m = 10) minimizers are found coordinate-wise; these are the
# per-coordinate minimizers of -sin(x) sin(i x^2 / pi)^20 on [0, pi].
_MICHALEWICZ_X = (
    2.202905519953, 1.570796326620, 1.284991570272, 1.923058469616, 1.720469772221,
    1.570796326618, 1.454413971099, 1.756086520760, 1.655717416548, 1.570796326618,
)


@dataclass(frozen=True)
class TestProblem:
    """A concrete problem instance at a fixed dimension."""

    __test__ = False  # keep pytest from collecting this class

    name: str
    objective: Callable
    a: tuple
    b: tuple
    f_star: float
    x_star: tuple
    tags: frozenset = frozenset()
    shift_seed: int | None = None

    @property
    def n(self) -> int:
        return len(self.a)

    def __call__(self, x) -> float:
        return self.objective(np.asarray(x, dtype=float))

    def to_opt_problem(self, f_goal: float | None = None) -> OptProblem:
        return OptProblem(self.objective, self.a, self.b, f_star=self.f_star, x_star=self.x_star,
                          f_goal=f_goal, name=self.name)


@dataclass(frozen=True)
class _Entry:
    name: str
    func: Callable
    bounds: Callable  # n -> (a, b)
    x_star: Callable  # n -> tuple
    f_star: Callable  # n -> float
    dim: int | None  # None for scalable problems
    tags: frozenset = field(default_factory=frozenset)
    core: bool = True


def _box(lo, hi):
    return lambda n: ((float(lo),) * n, (float(hi),) * n)


def _fixed(a, b):
    return lambda n: (tuple(map(float, a)), tuple(map(float, b)))


def _const(v):
    return lambda n: v


def _point(*x):
    return lambda n: tuple(map(float, x))


def _fill(v):
    return lambda n: (float(v),) * n


S, M, C = "separable", "multimodal", "scalable"

_REGISTRY = {}


def _register(name, func, bounds, x_star, f_star, dim=None, tags=(), core=True):
    tags = frozenset(tags) | ({C} if dim is None else frozenset())
    _REGISTRY[name] = _Entry(name, func, bounds, x_star, f_star, dim, tags, core)


_register("Sphere", sphere, _box(-5.12, 5.12), _fill(0.0), _const(0.0), tags=(S,))
_register("Branin", branin, _fixed((-5, 0), (10, 15)), _point(math.pi, 2.275), _const(5 / (4 * math.pi)), 2, (M,))
_register("Six-Hump Camel", six_hump_camel, _fixed((-3, -2), (3, 2)),
          _point(0.08984201368301331, -0.7126564032704135), _const(-1.031628453489877), 2, (M,))
_register("Goldstein-Price", goldstein_price, _fixed((-2, -2), (2, 2)), _point(0, -1), _const(3.0), 2, (M,))
_register("Rosenbrock", rosenbrock, _box(-5, 10), _fill(1.0), _const(0.0))
_register("Rastrigin", rastrigin, _box(-5.12, 5.12), _fill(0.0), _const(0.0), tags=(S, M))
_register("Ackley", ackley, _box(-32.768, 32.768), _fill(0.0), _const(0.0), tags=(M,))
_register("Griewank", griewank, _box(-600, 600), _fill(0.0), _const(0.0), tags=(M,))
_register("Levy", levy, _box(-10, 10), _fill(1.0), _const(0.0), tags=(M,))
_register("Schwefel", schwefel, _box(-500, 500), _fill(SCHWEFEL_X), _const(0.0),
          tags=(S, M))
_register("Zakharov", zakharov, _box(-5, 10), _fill(0.0), _const(0.0))
_register("Styblinski-Tang", styblinski_tang, _box(-5, 5), _fill(STYBLINSKI_X),
          lambda n: styblinski_tang(np.full(n, STYBLINSKI_X)), tags=(S, M))
_register("Easom", easom, _fixed((-100, -100), (100, 100)), _point(math.pi, math.pi), _const(-1.0), 2, (M,))
_register("Booth", booth, _fixed((-10, -10), (10, 10)), _point(1, 3), _const(0.0), 2)
_register("Matyas", matyas, _fixed((-10, -10), (10, 10)), _point(0, 0), _const(0.0), 2)
_register("Michalewicz", michalewicz, _box(0, math.pi), lambda n: _MICHALEWICZ_X[:n],
          lambda n: michalewicz(np.array(_MICHALEWICZ_X[:n])), tags=(S, M))
_register("Bohachevsky", bohachevsky, _fixed((-100, -100), (100, 100)), _point(0, 0), _const(0.0), 2, (M,))
_register("Shekel-5", shekel5, _fixed((0,) * 4, (10,) * 4),
          _point(4.000037153116, 4.000133275650, 4.000037152235, 4.000133277150), _const(-10.153199679058229), 4, (M,))
_register("Hartman-3", hartman3, _fixed((0,) * 3, (1,) * 3),
          _point(0.114588884403, 0.555648894315, 0.852546985061), _const(-3.862779787332663), 3, (M,))
_register("Hartman-6", hartman6, _fixed((0,) * 6, (1,) * 6),
          _point(0.201689508178, 0.150010692021, 0.476873975476, 0.275332430171, 0.311651616971, 0.657300533076),
          _const(-3.3223680114155147), 6, (M,))
_register("Beale", beale, _fixed((-4.5, -4.5), (4.5, 4.5)), _point(3, 0.5), _const(0.0), 2, (M,), core=False)
_register("Three-Hump Camel", three_hump_camel, _fixed((-5, -5), (5, 5)), _point(0, 0), _const(0.0), 2, (M,),
          core=False)
_register("Dixon-Price", dixon_price, _box(-10, 10),
          lambda n: tuple(2.0 ** (-(2.0 ** i - 2) / 2.0 ** i) for i in range(1, n + 1)), _const(0.0), core=False)
_register("Trid", trid, lambda n: ((-float(n * n),) * n, (float(n * n),) * n),
          lambda n: tuple(float(i * (n + 1 - i)) for i in range(1, n + 1)),
          lambda n: -n * (n + 4) * (n - 1) / 6.0, core=False)
_register("McCormick", mccormick, _fixed((-1.5, -3), (4, 4)),
          _point(0.5 - math.pi / 3, -0.5 - math.pi / 3), _const(-1.913222954981037), 2, (M,), core=False)
_register("Shubert", shubert, _fixed((-10, -10), (10, 10)), _point(-7.083506406300, 4.858056878036),
          _const(-186.7309088310239), 2, (M,), core=False)

# the fixed 20-problem two-dimensional benchmark: every core problem that
# exists at n = 2, then the first 2-D extras in registry order
SUITE_2D = (
    "Sphere", "Branin", "Six-Hump Camel", "Goldstein-Price", "Rosenbrock", "Rastrigin", "Ackley", "Griewank",
    "Levy", "Schwefel", "Zakharov", "Styblinski-Tang", "Easom", "Booth", "Matyas", "Michalewicz",
    "Bohachevsky", "Beale", "Three-Hump Camel", "Dixon-Price",
)


def problem_names(core_only: bool = False) -> list:
    return [e.name for e in _REGISTRY.values() if e.core or not core_only]


def make_problem(name: str, n: int | None = None) -> TestProblem:
    """Instantiate a registered problem (``n`` required only when scalable)."""
    try:
        e = _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; known: {', '.join(_REGISTRY)}") from None
    if e.dim is not None:
        if n is not None and n != e.dim:
            raise ValueError(f"{name} is defined for n={e.dim} only")
        n = e.dim
    elif n is None:
        n = 2
    if n < 2 and e.dim is None:
        raise ValueError(f"{name} needs n >= 2")
    if e.name == "Michalewicz" and n > len(_MICHALEWICZ_X):
        raise ValueError(f"Michalewicz optimum tabulated up to n={len(_MICHALEWICZ_X)}")
    a, b = e.bounds(n)
    return TestProblem(e.name, e.func, a, b, float(e.f_star(n)), tuple(e.x_star(n)), e.tags)


def check_optimum(problem: TestProblem, tol: float = OPT_TOL) -> float:
    """Return |f(x*) - f*|, raising if it exceeds ``tol``."""
    gap = abs(problem(problem.x_star) - problem.f_star)
    if not gap <= tol:
        raise AssertionError(f"{problem.name} (n={problem.n}): f(x*) differs from f* by {gap:.3e}")
    return gap


def builtin_suite(n: int | None = None, tags=None, core_only: bool = True, dims=(2, 5, 10), **filters) -> list:
    """Registered problems, optionally filtered.

    ``n`` keeps problems available at that dimension (scalable ones are
    instantiated at it); without ``n`` fixed problems use their own
    dimension and scalable ones are produced at every entry of ``dims``.
    ``tags`` keeps problems carrying all listed tags.
    """
    if filters:
        raise TypeError(f"unknown filter key(s): {', '.join(sorted(filters))}")
    tags = frozenset([tags] if isinstance(tags, str) else (tags or ()))
    bad = tags - set(TAGS)
    if bad:
        raise ValueError(f"unknown tag(s) {sorted(bad)}; expected among {TAGS}")
    out = []
    for e in _REGISTRY.values():
        if core_only and not e.core:
            continue
        if not tags <= e.tags:
            continue
        if n is not None:
            if e.dim is None or e.dim == n:
                out.append(make_problem(e.name, n if e.dim is None else None))
        elif e.dim is not None:
            out.append(make_problem(e.name))
        else:
            out.extend(make_problem(e.name, d) for d in dims)
    for p in out:
        check_optimum(p)
    return out


def suite_2d() -> list:
    return [make_problem(name, 2) for name in SUITE_2D]


def max_step(x_star, v, a, b) -> float:
    """Largest step along ``v`` from ``x_star`` that stays in [a, b]."""
    x_star, v = np.asarray(x_star, dtype=float), np.asarray(v, dtype=float)
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if not np.any(v != 0):
        raise ValueError("shift direction must be non-zero")
    with np.errstate(divide="ignore", invalid="ignore"):
        slack = np.where(v > 0, (b - x_star) / v, np.where(v < 0, (a - x_star) / v, np.inf))
    return float(max(0.0, np.min(slack)))


@dataclass(frozen=True)
class ShiftSpec:
    seed: int
    v: np.ndarray
    rho: np.ndarray
    step: float
    prng: str = PRNG_NAME

    @property
    def offset(self) -> np.ndarray:
        return self.rho * (self.step * self.v)


def draw_shift(seed: int, x_star, a, b) -> ShiftSpec:
    """Direction and rates for one seeded shift (direction first, then rates)."""
    rng = np.random.Generator(np.random.MT19937(seed))
    n = len(x_star)
    v = rng.standard_normal(n)
    while not np.any(v):
        v = rng.standard_normal(n)
    v = v / np.linalg.norm(v)
    rho = rng.uniform(0.0, SHIFT_RATE_MAX, n)
    return ShiftSpec(seed, v, rho, max_step(x_star, v, a, b))


class ShiftedObjective:
    """g(x) = f(clip(x - offset, a, b)); picklable for worker processes."""

    def __init__(self, func, offset, a, b):
        self.func = func
        self.offset = np.asarray(offset, dtype=float)
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)

    def __call__(self, x) -> float:
        return self.func(np.clip(np.asarray(x, dtype=float) - self.offset, self.a, self.b))


def shift_problem(problem: TestProblem, seed: int, spec: ShiftSpec | None = None) -> TestProblem:
    """Move the minimizer to x_hat = clip(x* + rho * (step * v), a, b)."""
    if problem.x_star is None:
        raise ValueError(f"{problem.name} has no known minimizer to shift")
    if spec is None:
        spec = draw_shift(seed, problem.x_star, problem.a, problem.b)
    a, b = np.asarray(problem.a), np.asarray(problem.b)
    x_hat = np.clip(np.asarray(problem.x_star) + spec.offset, a, b)
    g = ShiftedObjective(problem.objective, spec.offset, a, b)
    return TestProblem(problem.name, g, problem.a, problem.b, problem.f_star, tuple(x_hat.tolist()),
                       problem.tags, seed)
