"""
Count-table transforms and dataset filters.

This module provides:
- Size factors: median-of-ratios library scaling
- Variance stabilisation: Anscombe transform for NB counts
- Ranks: truncated-rank and presence/absence transforms
- Filters: read-depth, prevalence and taxonomy screens
"""

from .size_factors import ensure_size_factors, median_of_ratios, scale_by_size_factors
from .variance_stabilizing import anscombe
from .ranks import presence_absence, truncated_rank
from .tables import TABLE_METHODS, fit_dispersions, transform_table
from . import filters

__all__ = [
    "ensure_size_factors",
    "median_of_ratios",
    "scale_by_size_factors",
    "anscombe",
    "presence_absence",
    "truncated_rank",
    "TABLE_METHODS",
    "fit_dispersions",
    "transform_table",
    "filters",
]
