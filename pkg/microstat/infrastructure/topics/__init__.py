"""
LDA topic models: fitting, chain alignment, diagnostics, predictive checks
and differential topics.
"""

from .fit import LdaSpec, TopicFit, fit_from_payload, fit_to_payload, topic_ids
from .base import TopicModel
from .alignment import align_chains, match_topics
from .diagnostics import diagnostics, ess_bulk, rank_normalize, split_rhat
from .lda import (
    MAX_TOKENS,
    CollapsedGibbsLda,
    fit_lda,
    gibbs_sweep,
    grouped_sweep,
    joint_log_likelihood,
)
from .ppc import PpcResult, posterior_predictive_check
from .differential import (
    differential_topic_rows,
    differential_topics,
    top_taxa_frame,
    topic_counts,
    topic_proportions_frame,
)
from .scan import heldout_log_likelihood, holdout_split, scan_topics

__all__ = [
    "LdaSpec",
    "TopicFit",
    "fit_from_payload",
    "fit_to_payload",
    "topic_ids",
    "TopicModel",
    "align_chains",
    "match_topics",
    "diagnostics",
    "ess_bulk",
    "rank_normalize",
    "split_rhat",
    "MAX_TOKENS",
    "CollapsedGibbsLda",
    "fit_lda",
    "gibbs_sweep",
    "grouped_sweep",
    "joint_log_likelihood",
    "PpcResult",
    "posterior_predictive_check",
    "differential_topic_rows",
    "differential_topics",
    "top_taxa_frame",
    "topic_counts",
    "topic_proportions_frame",
    "heldout_log_likelihood",
    "holdout_split",
    "scan_topics",
]
