"""Experiment drivers, reports and the registry that names them."""
from .registry import CRITERIA, REGISTRY, default_config, run_experiment
from .report import FAIL, INCONCLUSIVE, INVALID, PASS, EstimateReport, RateFit

__all__ = ["CRITERIA", "REGISTRY", "default_config", "run_experiment", "EstimateReport", "RateFit",
           "PASS", "FAIL", "INCONCLUSIVE", "INVALID"]
