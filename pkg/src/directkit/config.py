"""Algorithm configuration: option domains, validation, presets and counts."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field, fields

from .geometry import MIDPOINT_SCHEMES, SCHEMES, SIDE_RULES
from .hybrid import HYBRID_STRATEGIES, LOCAL_SOLVERS
from .selection import (AGGREGATIONS, CONTROL_EP, EQUAL_CAND, MEASURES, SOL_REFIN, STRATEGIES,
                        default_lambda)

ON_OFF = ("On", "Off")

# dotted key -> (attribute, domain); a domain of None means numeric
KEYS = {
    "Partitioning.Strategy": ("scheme", SCHEMES),
    "Partitioning.SubSides": ("side_rule", SIDE_RULES),
    "Selection.AggrFuncVal": ("aggr", AGGREGATIONS),
    "Selection.CandMeasure": ("cand_measure", MEASURES),
    "Selection.Strategy": ("strategy", STRATEGIES),
    "Selection.EqualCand": ("equal_cand", EQUAL_CAND),
    "Selection.SolRefin": ("sol_refin", SOL_REFIN),
    "Selection.Ep": ("ep", None),
    "Selection.ControlEp": ("control_ep", CONTROL_EP),
    "Selection.GloballyBiased": ("globally_biased", ON_OFF),
    "Selection.TwoPhase": ("two_phase", ON_OFF),
    "Selection.Lambda": ("lam", None),
    "Hybridization.Strategy": ("hybrid", HYBRID_STRATEGIES),
    "Hybridization.LocalSearch": ("local_search", LOCAL_SOLVERS),
    "Hybridization.MaxIterations": ("ls_max_iterations", None),
    "Hybridization.MaxEvaluations": ("ls_max_evaluations", None),
}
ATTR_TO_KEY = {attr: key for key, (attr, _) in KEYS.items()}

# spellings accepted on input and normalized away
ALIASES = {
    ("Selection.AggrFuncVal", "Min"): "Minimum",
    ("Partitioning.SubSides", "ALL"): "All",
}


class ConfigError(ValueError):
    def __init__(self, errors: list):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class AlgorithmConfig:
    scheme: str = "DTC"
    side_rule: str = "All"
    aggr: str = "Midpoint"
    cand_measure: str = "Diagonal"
    strategy: str = "Original"
    equal_cand: str = "All"
    sol_refin: str = "Min"
    ep: float = 1e-4
    control_ep: str = "Off"
    globally_biased: str = "Off"
    two_phase: str = "Off"
    lam: float | None = None
    hybrid: str = "Off"
    local_search: str = "interior-point"
    ls_max_iterations: int = 1000
    ls_max_evaluations: int = 3000
    warnings: tuple = field(default=(), compare=False)

    @property
    def measure_lambda(self) -> float:
        return default_lambda(self.scheme) if self.lam is None else self.lam

    def to_dict(self) -> dict:
        d = {ATTR_TO_KEY[k]: v for k, v in asdict(self).items() if k in ATTR_TO_KEY}
        if d["Selection.Lambda"] is None:
            del d["Selection.Lambda"]
        return d


def validate_config(config=None) -> AlgorithmConfig:
    """Normalize a dotted-key dict (or an AlgorithmConfig) into a full record.

    Missing keys take their defaults.  All problems are collected and raised
    together as a :class:`ConfigError`.
    """
    if config is None:
        config = {}
    if isinstance(config, AlgorithmConfig):
        config = config.to_dict()
    if not isinstance(config, dict):
        raise ConfigError([f"config must be a mapping, got {type(config).__name__}"])
    errors, values = [], {}
    for key, raw in config.items():
        if key not in KEYS:
            errors.append(f"{key}: unknown parameter")
            continue
        attr, domain = KEYS[key]
        value = ALIASES.get((key, raw), raw)
        if domain is not None:
            if value not in domain:
                errors.append(f"{key}: {raw!r} not in {list(domain)}")
                continue
        elif attr == "ep":
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value) or value < 0:
                errors.append(f"{key}: expected a finite number >= 0, got {raw!r}")
                continue
            value = float(value)
        elif attr == "lam":
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not 0 < value <= 1:
                errors.append(f"{key}: expected a number in (0, 1], got {raw!r}")
                continue
            value = float(value)
        else:
            if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
                errors.append(f"{key}: expected a positive integer, got {raw!r}")
                continue
        values[attr] = value
    if errors:
        raise ConfigError(errors)
    cfg = AlgorithmConfig(**values)
    warnings = []
    if cfg.aggr in ("Midpoint", "MidMin") and cfg.scheme not in MIDPOINT_SCHEMES:
        warnings.append(f"{cfg.scheme} has no midpoint sample; Selection.AggrFuncVal={cfg.aggr} "
                        "uses the minimum sample value instead")
    if cfg.scheme in ("DTCS", "DBVS") and cfg.side_rule == "One":
        warnings.append("Partitioning.SubSides has no effect on simplicial schemes")
    return AlgorithmConfig(**values, warnings=tuple(warnings))


def config_space_size() -> tuple:
    """Number of distinct (partitioning, selection, hybridization) settings.

    Counts the categorical domains only; Ep and the local-search limits are
    continuous parameters and do not enter the count.
    """
    partitioning = sum(1 for _ in itertools.product(SCHEMES, SIDE_RULES))
    selection = sum(1 for _ in itertools.product(AGGREGATIONS, MEASURES, STRATEGIES, EQUAL_CAND, SOL_REFIN,
                                                 CONTROL_EP, ON_OFF, ON_OFF))
    active = [s for s in HYBRID_STRATEGIES if s != "Off"]
    hybridization = 1 + sum(1 for _ in itertools.product(active, LOCAL_SOLVERS))
    return partitioning, selection, hybridization


_ORIGINAL = {
    "1-DTC-GL": {
        "Partitioning.Strategy": "DTC", "Partitioning.SubSides": "One",
        "Selection.AggrFuncVal": "Midpoint", "Selection.CandMeasure": "Diagonal",
        "Selection.Strategy": "Pareto", "Selection.EqualCand": "One", "Selection.SolRefin": "Off",
        "Selection.ControlEp": "Off", "Selection.GloballyBiased": "Off", "Selection.TwoPhase": "On",
        "Hybridization.Strategy": "Off",
    },
    "HALRECT-IA": {
        "Partitioning.Strategy": "DBC", "Partitioning.SubSides": "All",
        "Selection.AggrFuncVal": "MidMin", "Selection.CandMeasure": "Diagonal",
        "Selection.Strategy": "Aggressive", "Selection.EqualCand": "One", "Selection.SolRefin": "Off",
        "Selection.ControlEp": "Off", "Selection.GloballyBiased": "Off", "Selection.TwoPhase": "Off",
        "Hybridization.Strategy": "Off",
    },
    "MrDIRECT": {
        "Partitioning.Strategy": "DTC", "Partitioning.SubSides": "All",
        "Selection.AggrFuncVal": "Midpoint", "Selection.CandMeasure": "Diagonal",
        "Selection.Strategy": "Original", "Selection.EqualCand": "All", "Selection.SolRefin": "Min",
        "Selection.Ep": 0.0001, "Selection.ControlEp": "MultiLevel1", "Selection.GloballyBiased": "Off",
        "Selection.TwoPhase": "Off", "Hybridization.Strategy": "Off",
    },
    "BIRMIN": {
        "Partitioning.Strategy": "DBDP", "Partitioning.SubSides": "One",
        "Selection.AggrFuncVal": "Min", "Selection.CandMeasure": "Diagonal",
        "Selection.Strategy": "Original", "Selection.EqualCand": "One", "Selection.SolRefin": "Min",
        "Selection.Ep": 0.0001, "Selection.ControlEp": "Off", "Selection.GloballyBiased": "On",
        "Selection.TwoPhase": "Off", "Hybridization.Strategy": "Single",
        "Hybridization.LocalSearch": "interior-point", "Hybridization.MaxIterations": 1000,
        "Hybridization.MaxEvaluations": 3000,
    },
    "DIRMIN": {
        "Partitioning.Strategy": "DTC", "Partitioning.SubSides": "All",
        "Selection.AggrFuncVal": "Midpoint", "Selection.CandMeasure": "Diagonal",
        "Selection.Strategy": "Original", "Selection.EqualCand": "All", "Selection.SolRefin": "Min",
        "Selection.Ep": 0.0001, "Selection.ControlEp": "Off", "Selection.GloballyBiased": "Off",
        "Selection.TwoPhase": "Off", "Hybridization.Strategy": "Aggressive",
        "Hybridization.LocalSearch": "interior-point", "Hybridization.MaxIterations": 1000,
        "Hybridization.MaxEvaluations": 3000,
    },
}

_SQP_HYBRID = {"Hybridization.LocalSearch": "sqp", "Hybridization.MaxIterations": 1000,
               "Hybridization.MaxEvaluations": 3000}
_IMPROVED_CHANGES = {
    "1-DTC-GL": {"Hybridization.Strategy": "Single", **_SQP_HYBRID},
    "HALRECT-IA": {"Hybridization.Strategy": "Aggressive", **_SQP_HYBRID},
    "MrDIRECT": {"Hybridization.Strategy": "Clustering", **_SQP_HYBRID},
    "BIRMIN": {"Partitioning.SubSides": "All", "Selection.Strategy": "Pareto", "Hybridization.LocalSearch": "sqp"},
    "DIRMIN": {"Selection.CandMeasure": "LongSide", "Selection.EqualCand": "One", "Selection.SolRefin": "Median"},
}
_IMPROVED = {name: {**_ORIGINAL[name], **_IMPROVED_CHANGES[name]} for name in _ORIGINAL}

PRESET_NAMES = tuple(_ORIGINAL)
VARIANTS = ("original", "improved")


def preset_names() -> list:
    """Qualified names of every preset, plus the classic ``DIRECT`` defaults."""
    return ["DIRECT"] + [f"{v}:{name}" for v in VARIANTS for name in PRESET_NAMES]


def preset_dict(name: str) -> dict:
    """Raw dotted-key parameters of a preset (unset entries omitted)."""
    if name == "DIRECT":
        return {}
    variant, _, base = name.rpartition(":")
    variant = variant or "original"
    table = {"original": _ORIGINAL, "improved": _IMPROVED}.get(variant)
    if table is None or base not in table:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(preset_names())}")
    return dict(table[base])


def preset(name: str) -> AlgorithmConfig:
    return validate_config(preset_dict(name))
