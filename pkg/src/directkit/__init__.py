"""Composable DIRECT-type global optimization.

Algorithms are assembled from a partitioning scheme, a candidate selection
rule and an optional hybrid local search, all configured through
:class:`AlgorithmConfig`.
"""

from .config import AlgorithmConfig, ConfigError, config_space_size, preset, preset_names, validate_config
from .engine import OptProblem, RunLimits, RunResult, percent_error, run, should_stop
from .geometry import ObjectiveError, make_scaler
from .problems import builtin_suite, make_problem, shift_problem

__all__ = [
    "AlgorithmConfig", "ConfigError", "ObjectiveError", "OptProblem", "RunLimits", "RunResult",
    "builtin_suite", "config_space_size", "make_problem", "make_scaler", "percent_error", "preset",
    "preset_names", "run", "shift_problem", "should_stop", "validate_config",
]
__version__ = "0.1.0"
