"""Successor-feature policy sets for linear multi-objective tasks."""

__version__ = "0.1.0"

from .gpi import GPIEvaluator, PolicyEntry, SFSet, gpi_action, gpi_policy, smp_value
from .momdp import TabularMOMDP, one_hot_wrap, raw_weight, validate_weight
from .ols import RunResult, SFOLSConfig, sfols_run

__all__ = [
    "GPIEvaluator",
    "PolicyEntry",
    "RunResult",
    "SFOLSConfig",
    "SFSet",
    "TabularMOMDP",
    "gpi_action",
    "gpi_policy",
    "one_hot_wrap",
    "raw_weight",
    "sfols_run",
    "smp_value",
    "validate_weight",
]
