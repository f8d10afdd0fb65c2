"""
Contaminant detection using negative controls.
"""

from .base import Decontaminator
from .bayes import (
    BayesianDecontaminator,
    ContamPrior,
    McmcSettings,
    PosteriorDraws,
    PosteriorSummary,
    call_contaminants,
    contamination_frame,
    estimate_contam_prior,
    gibbs_step,
    hpd_interval,
    sample_posterior,
    size_factor_reference,
    summarize_draws,
)
from .reference_prior import GammaPrior, ReferencePrior, fisher_information, marginal_pmf

__all__ = [
    "Decontaminator",
    "BayesianDecontaminator",
    "ContamPrior",
    "McmcSettings",
    "PosteriorDraws",
    "PosteriorSummary",
    "call_contaminants",
    "contamination_frame",
    "estimate_contam_prior",
    "gibbs_step",
    "hpd_interval",
    "sample_posterior",
    "size_factor_reference",
    "summarize_draws",
    "GammaPrior",
    "ReferencePrior",
    "fisher_information",
    "marginal_pmf",
]
