"""Post-processing of the evaluated tradespace: mining, sensitivity, scenarios, failures."""

from .failure import FailureReport, failure_study
from .mining import Feature, Rule, mine_rules
from .scenarios import SweepResult, enumerate_scenarios, scenario_sweep
from .sensitivity import SensitivityReport, sobol_indices

__all__ = [
    "FailureReport", "Feature", "Rule", "SensitivityReport", "SweepResult", "enumerate_scenarios",
    "failure_study", "mine_rules", "scenario_sweep", "sobol_indices",
]
