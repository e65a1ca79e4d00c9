"""Command-line front-end.

Exit codes: 0 success, 1 usage error, 2 run failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import bench
from .config import ConfigError, config_space_size, preset, preset_dict, preset_names, validate_config
from .engine import RunLimits, run
from .problems import builtin_suite, make_problem, problem_names, shift_problem

SEED_ENV = "GENDIRECT_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1) if part[0] != "-" else (part, part)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"no integers in {text!r}")
    return out


def _env_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _load_config(args):
    if args.config and args.preset:
        raise UsageError("use either --config or --preset, not both")
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        return args.config, validate_config(data)
    name = args.preset or "DIRECT"
    try:
        return name, preset(name)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


def _limits(args):
    return RunLimits(max_evals=args.max_evals, max_iters=args.max_iters, max_time=args.max_time)


def cmd_run(args) -> int:
    name, cfg = _load_config(args)
    try:
        prob = make_problem(args.problem, args.n)
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc.args[0])) from None
    seed = args.seed if args.seed is not None else _env_seed()
    if seed is not None:
        prob = shift_problem(prob, seed)
    res = run(cfg, prob.to_opt_problem(f_goal=args.fgoal), _limits(args), seed)
    out = {
        "problem": prob.name, "n": prob.n, "config": name, "seed": seed,
        "fmin": res.f_min, "xmin": np.asarray(res.x_min).tolist(), "k": res.k, "m": res.m,
        "pe": res.pe, "stop_reason": res.stop_reason, "wall_ms": round(res.wall_ms, 1),
        "warnings": list(cfg.warnings),
    }
    text = json.dumps(out, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def _suite_configs(spec: str | None) -> dict:
    if not spec:
        return {"DIRECT": validate_config({})}
    out = {}
    for item in spec.split(","):
        item = item.strip()
        if item.endswith(".json"):
            try:
                out[Path(item).stem] = validate_config(json.loads(Path(item).read_text()))
            except (OSError, json.JSONDecodeError) as exc:
                raise UsageError(f"cannot read config {item}: {exc}") from None
        else:
            try:
                out[item] = validate_config(preset_dict(item))
            except KeyError as exc:
                raise UsageError(str(exc.args[0])) from None
    return out


def cmd_suite(args) -> int:
    configs = _suite_configs(args.configs)
    if args.all:
        problems = [p for d in args.dims for p in builtin_suite(n=d)]
    elif args.problems:
        problems = []
        for name in args.problems.split(","):
            for d in args.dims:
                try:
                    problems.append(make_problem(name.strip(), d))
                except ValueError:
                    continue
                except KeyError as exc:
                    raise UsageError(str(exc.args[0])) from None
        # fixed-dimension problems are instantiated once
        seen, unique = set(), []
        for p in problems:
            if (p.name, p.n) not in seen:
                seen.add((p.name, p.n))
                unique.append(p)
        problems = unique
    else:
        raise UsageError("give --problems or --all")
    if not problems:
        raise UsageError("no problem matches the requested dimensions")
    seeds = args.seeds
    if seeds is None:
        env = _env_seed()
        seeds = [env if env is not None else 0]
    records = bench.run_suite(configs, problems, _limits(args), seeds, args.jobs)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    bench.write_records_csv(records, out_dir / "records.csv")
    bench.write_records_jsonl(records, out_dir / "records.jsonl")
    solved = sum(r.solved for r in records)
    print(f"{len(records)} runs, {solved} solved; records in {out_dir}")
    return 0


def _records(path):
    try:
        recs = bench.read_records(path)
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"cannot read records {path}: {exc}") from None
    if not recs:
        raise UsageError(f"{path} holds no records")
    return recs


def cmd_profile(args) -> int:
    prof = bench.data_profile(_records(args.records), bench.default_budgets())
    if args.out:
        bench.write_profile_csv(prof, args.out)
    else:
        bench.write_profile_csv(prof, "/dev/stdout")
    return 0


def cmd_ranks(args) -> int:
    recs = _records(args.records)
    budgets = args.budgets or list(bench.SNAPSHOT_FACTORS)
    rows = {}
    try:
        for b in budgets:
            rows[f"n*{b}"] = bench.friedman_mean_ranks(recs, b)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    configs = sorted(next(iter(rows.values())))
    print("budget," + ",".join(configs))
    for label, ranks in rows.items():
        print(label + "," + ",".join(f"{ranks[c]:.3f}" for c in configs))
    return 0


def cmd_presets(args) -> int:
    for name in preset_names():
        print(name)
        if args.verbose:
            for key, value in preset(name).to_dict().items():
                print(f"    {key} = {value}")
    return 0


def cmd_combos(args) -> int:
    print(config_space_size())
    return 0


def cmd_problems(args) -> int:
    for name in problem_names():
        print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="directkit", description="Composable DIRECT-type global optimization.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def limits(p, evals_default=None):
        p.add_argument("--max-evals", type=int, default=evals_default, help="evaluation budget (default n*1e5)")
        p.add_argument("--max-iters", type=int, default=None)
        p.add_argument("--max-time", type=float, default=None, help="wall-clock limit in seconds")

    p = sub.add_parser("run", help="single optimization run")
    p.add_argument("--config", help="JSON file with dotted parameter keys")
    p.add_argument("--preset", help="preset name, see 'presets'")
    p.add_argument("--problem", required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help=f"shift seed (default ${SEED_ENV}, else unshifted)")
    p.add_argument("--fgoal", type=float, default=None)
    p.add_argument("--out")
    limits(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("suite", help="benchmark cross product")
    p.add_argument("--configs", help="comma-separated preset names or JSON files")
    p.add_argument("--problems", help="comma-separated problem names")
    p.add_argument("--all", action="store_true", help="every built-in problem")
    p.add_argument("--dims", type=_int_list, default=[2, 5, 10])
    p.add_argument("--seeds", type=_int_list, default=None, help="e.g. 0-9 or 1,5,7")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-dir", default="results")
    limits(p)
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("profile", help="data profile CSV from records")
    p.add_argument("--records", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("ranks", help="mean ranks at evaluation snapshots")
    p.add_argument("--records", required=True, help="records.jsonl (snapshots) file")
    p.add_argument("--budgets", type=_int_list, default=None, help="evaluations per dimension, e.g. 100,1000")
    p.set_defaults(func=cmd_ranks)

    p = sub.add_parser("presets", help="list preset configurations")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_presets)

    p = sub.add_parser("combos", help="count the configuration space")
    p.set_defaults(func=cmd_combos)

    p = sub.add_parser("problems", help="list built-in problems")
    p.set_defaults(func=cmd_problems)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # run failure: objective errors, I/O, numerical trouble
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
