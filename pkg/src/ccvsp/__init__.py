"""Chance-constrained multi-depot vehicle scheduling toolkit."""

from .baselines import MEAN, evaluate_out_of_sample, percentile, solve_deterministic
from .bnc import BnCConfig, BnCResult, solve_bnc
from .core import (
    Bus,
    Depot,
    Instance,
    Schedule,
    ServiceParams,
    Trip,
    ValidationError,
    cc_threshold,
    load_instance,
    save_instance,
    schedule_cost,
)
from .lagrangian import solve_lagrangian
from .scenarios import GenParams, ScenarioSet, generate_instance, sample_scenarios
from .subproblem import count_violated_scenarios, greedy_evaluate

__version__ = "0.1.0"

__all__ = [
    "MEAN", "evaluate_out_of_sample", "percentile", "solve_deterministic",
    "BnCConfig", "BnCResult", "solve_bnc",
    "Bus", "Depot", "Instance", "Schedule", "ServiceParams", "Trip",
    "ValidationError", "cc_threshold", "load_instance", "save_instance",
    "schedule_cost", "solve_lagrangian",
    "GenParams", "ScenarioSet", "generate_instance", "sample_scenarios",
    "count_violated_scenarios", "greedy_evaluate",
]
