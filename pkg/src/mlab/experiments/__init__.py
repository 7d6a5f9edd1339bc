"""Config-driven experiments with JSON/CSV reports, and the ``mlab`` CLI."""
from . import _env  # noqa: F401  (thread settings must precede numpy)
from .config import ConfigError, ExperimentConfig, full_schema
from .report import (ExperimentError, ExperimentReport, FitError, GrowthFit, Table,
                     evaluate_verdicts, fit_growth_exponent, fit_theta_exponent)
from .runner import load_config, recompute_verdicts, run
from .scenarios import REGISTRY, BudgetExceeded

__all__ = [
    "ConfigError", "ExperimentConfig", "ExperimentError", "ExperimentReport", "FitError",
    "GrowthFit", "Table", "REGISTRY", "BudgetExceeded", "evaluate_verdicts",
    "fit_growth_exponent", "fit_theta_exponent", "full_schema", "load_config",
    "recompute_verdicts", "run",
]
