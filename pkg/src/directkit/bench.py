"""Benchmark harness: suite execution, success rates, data profiles, ranks."""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .config import validate_config
from .engine import RunLimits, percent_error, run
from .problems import TAGS, TestProblem, make_problem, shift_problem

CSV_COLUMNS = ("problem", "n", "config", "seed", "m", "k", "fmin", "pe", "solved", "stop_reason", "wall_ms")
SNAPSHOT_FACTORS = (10**2, 10**3, 10**4, 10**5)


@dataclass
class SuiteRecord:
    problem: str
    n: int
    config: str
    seed: int
    m: int
    k: int
    fmin: float
    pe: float
    solved: bool
    stop_reason: str
    wall_ms: float
    checkpoints: dict = field(default_factory=dict)

    @property
    def instance(self) -> tuple:
        return (self.problem, self.n, self.seed)

    def csv_row(self) -> dict:
        row = {c: getattr(self, c) for c in CSV_COLUMNS}
        row["fmin"] = repr(self.fmin)
        row["pe"] = repr(self.pe)
        row["solved"] = int(self.solved)
        row["wall_ms"] = f"{self.wall_ms:.1f}"
        return row


@dataclass(frozen=True)
class DataProfile:
    budgets: tuple
    curves: dict  # config -> tuple of fractions


def snapshot_budgets(n: int) -> tuple:
    return tuple(n * f for f in SNAPSHOT_FACTORS)


def run_one(config_name: str, config, problem: TestProblem, seed: int | None, limits: RunLimits,
            shift: bool = True) -> SuiteRecord:
    """Run one (config, problem, seed) triple and summarize it."""
    inst = shift_problem(problem, seed) if shift and seed is not None else problem
    res = run(config, inst.to_opt_problem(), limits, seed)
    max_evals = limits.evals_for(problem.n)
    # a run cut off by the wall clock is booked at the full budget
    m = max_evals if res.stop_reason == "time" else res.m
    pe = percent_error(res.f_min, problem.f_star)
    checkpoints = {str(b): res.f_min_at(b) for b in snapshot_budgets(problem.n)}
    return SuiteRecord(problem.name, problem.n, config_name, -1 if seed is None else seed, m, res.k, res.f_min,
                       pe, pe < limits.pe_tolerance, res.stop_reason, res.wall_ms, checkpoints)


def _task(args):
    return run_one(*args)


def run_suite(configs: dict, problems, limits: RunLimits | None = None, seeds=(0,), jobs: int = 1,
              shift: bool = True) -> list:
    """Cross product of configs x problems x seeds.

    ``configs`` maps a config id to a config (dict or AlgorithmConfig);
    ``problems`` holds TestProblem instances.  Records come back in
    (config, problem, seed) order whatever the worker count.
    """
    if not configs:
        raise ValueError("no configurations given")
    problems = list(problems)
    if not problems:
        raise ValueError("no problems given")
    limits = limits or RunLimits()
    tasks = [(name, validate_config(cfg), p, s, limits, shift)
             for name, cfg in configs.items() for p in problems for s in seeds]
    if jobs <= 1:
        return [_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_task, tasks))


def _by_config(records) -> dict:
    out = defaultdict(list)
    for r in records:
        out[r.config].append(r)
    return dict(out)


def data_profile(records, budgets) -> DataProfile:
    """Fraction of instances solved within each budget (evaluations / n)."""
    records = list(records)
    if not records:
        raise ValueError("no records")
    budgets = tuple(budgets)
    curves = {}
    for config, recs in _by_config(records).items():
        total = len(recs)
        curves[config] = tuple(sum(1 for r in recs if r.solved and r.m / r.n <= b) / total for b in budgets)
    return DataProfile(budgets, curves)


def default_budgets(points_per_decade: int = 4, top: float = 1e5) -> tuple:
    k = int(round(math.log10(top) * points_per_decade))
    return tuple(float(v) for v in np.logspace(0, math.log10(top), k + 1))


def _problem_tags(records) -> dict:
    tags = {}
    for r in records:
        if r.problem not in tags:
            try:
                tags[r.problem] = make_problem(r.problem, r.n).tags
            except (KeyError, ValueError):
                tags[r.problem] = frozenset()
    return tags


def success_table(records, facets=TAGS, problem_tags: dict | None = None) -> dict:
    """Percentage solved per config, overall and per facet.

    Each facet ``f`` is reported together with ``non-f`` so the two halves
    partition the overall population.  An empty population is reported as
    None rather than 0.
    """
    records = list(records)
    for f in facets:
        if f not in TAGS:
            raise ValueError(f"unknown facet {f!r}; expected among {TAGS}")
    tags = problem_tags if problem_tags is not None else _problem_tags(records)
    table = {}
    for config, recs in _by_config(records).items():
        row = {"overall": _rate(recs)}
        for f in facets:
            row[f] = _rate([r for r in recs if f in tags.get(r.problem, ())])
            row[f"non-{f}"] = _rate([r for r in recs if f not in tags.get(r.problem, ())])
        table[config] = row
    return table


def _rate(recs):
    if not recs:
        return None
    return 100.0 * sum(r.solved for r in recs) / len(recs)


def mean_ranks(table: dict) -> dict:
    """Average rank per config over problems; ``table[problem][config] = value``.

    Lower values rank better; ties share the average rank.
    """
    if not table:
        raise ValueError("empty rank table")
    configs = None
    sums = defaultdict(float)
    for problem, row in table.items():
        if configs is None:
            configs = sorted(row)
        elif sorted(row) != configs:
            raise ValueError(f"problem {problem!r} covers {sorted(row)}, expected {configs}")
        ranks = rankdata([row[c] for c in configs], method="average")
        for c, r in zip(configs, ranks):
            sums[c] += float(r)
    return {c: sums[c] / len(table) for c in configs}


def friedman_mean_ranks(records, budget_factor: int | None = None) -> dict:
    """Mean rank of each config by f_min at ``budget_factor * n`` evaluations
    (final value when None)."""
    table = defaultdict(dict)
    for r in records:
        if budget_factor is None:
            v = r.fmin
        else:
            key = str(r.n * budget_factor)
            if key not in r.checkpoints:
                raise ValueError(f"record {r.instance} has no snapshot at {key} evaluations")
            v = r.checkpoints[key]
        table[r.instance][r.config] = v
    return mean_ranks(dict(table))


def write_records_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for r in records:
            w.writerow(r.csv_row())


def read_records_csv(path) -> list:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(SuiteRecord(row["problem"], int(row["n"]), row["config"], int(row["seed"]), int(row["m"]),
                                   int(row["k"]), float(row["fmin"]), float(row["pe"]), row["solved"] in ("1", "True"),
                                   row["stop_reason"], float(row["wall_ms"])))
    return out


def write_records_jsonl(records, path) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(asdict(r), sort_keys=True) + "\n")


def read_records_jsonl(path) -> list:
    with open(path) as fh:
        return [SuiteRecord(**json.loads(line)) for line in fh if line.strip()]


def read_records(path) -> list:
    path = Path(path)
    return read_records_jsonl(path) if path.suffix == ".jsonl" else read_records_csv(path)


def write_profile_csv(profile: DataProfile, path) -> None:
    configs = sorted(profile.curves)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["budget_per_dim", *configs])
        for i, b in enumerate(profile.budgets):
            w.writerow([repr(b), *(repr(profile.curves[c][i]) for c in configs)])
