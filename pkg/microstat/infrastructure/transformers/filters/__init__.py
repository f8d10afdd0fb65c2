"""
Dataset filters.

Filters can be applied at any stage: passed to a reader as an 'after'
transformer, to a writer as a 'before' transformer, or called directly.
"""

from .base import DatasetFilter
from .spec_filter import FilterSpec, SpecFilter, TaxonomyRule, filter_dataset, parse_rules

__all__ = [
    "DatasetFilter",
    "FilterSpec",
    "SpecFilter",
    "TaxonomyRule",
    "filter_dataset",
    "parse_rules",
]
