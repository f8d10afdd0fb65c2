"""
Count models: negative binomial fitting, goodness of fit, simulation and NB-GLM tests.
"""

from .negative_binomial import NBFit, NBParams, fit_nb, method_of_moments, nb_log_likelihood
from .goodness_of_fit import GofReport, GofResult, gof_all, gof_nb
from .simulator import SimScenario, SimulationTruth, scenario_for, simulate, simulate_with_truth
from .nbglm import WaldRow, bh_adjust, two_level_design, wald_frame, wald_test

__all__ = [
    "NBFit",
    "NBParams",
    "fit_nb",
    "method_of_moments",
    "nb_log_likelihood",
    "GofReport",
    "GofResult",
    "gof_all",
    "gof_nb",
    "SimScenario",
    "SimulationTruth",
    "scenario_for",
    "simulate",
    "simulate_with_truth",
    "WaldRow",
    "bh_adjust",
    "two_level_design",
    "wald_frame",
    "wald_test",
]
