"""
Named count-table transforms applied to a whole dataset.
"""

from typing import Optional, Union

import numpy as np

from microstat.core.count_table import CountTable
from microstat.core.dataset import Dataset
from microstat.core.transformed import TransformedTable
from microstat.infrastructure.models.negative_binomial import NBParams, fit_nb
from microstat.shared import ordered_map
from microstat.shared.errors import flag
from .ranks import presence_absence, truncated_rank
from .size_factors import ensure_size_factors, scale_by_size_factors
from .variance_stabilizing import anscombe

TABLE_METHODS = ("none", "scale", "anscombe", "trunc-rank", "presence")


def fit_dispersions(
    dataset: Dataset, threads: Optional[int] = None
) -> list[Optional[NBParams]]:
    """
    Per-taxon NB (mu, k) fitted on the biological specimens with their size factors.

    Taxa that cannot be fitted (all zero across the biological specimens, or
    fewer than three of them) get None and are reported in one
    StatisticalWarning.
    """
    biological = ensure_size_factors(dataset).biological()
    counts = biological.counts.counts
    d = biological.size_factors
    fittable = counts.shape[1] >= 3

    def fit_row(i: int) -> Optional[NBParams]:
        if not fittable or not np.any(counts[i] > 0):
            return None
        return fit_nb(counts[i], d).params

    params = ordered_map(fit_row, range(counts.shape[0]), threads)
    skipped = [t for t, p in zip(biological.counts.taxa_ids, params) if p is None]
    if skipped:
        flag(f"no dispersion fit for taxa: {', '.join(skipped)}")
    return params


def transform_table(
    dataset: Dataset,
    method: str,
    threshold: Optional[int] = None,
    tau: int = 2,
    threads: Optional[int] = None,
) -> Union[CountTable, TransformedTable]:
    """
    Apply one of the named transforms to the dataset's counts.

    Args:
        dataset: Dataset to transform
        method: 'none', 'scale' (divide by size factors), 'anscombe',
            'trunc-rank' or 'presence'
        threshold: Rank threshold t for 'trunc-rank' (default: a third of
            the taxa tie at one)
        tau: Read threshold for 'presence'
        threads: Worker cap for the per-taxon NB fits of 'anscombe'

    Raises:
        ValueError: If the method is unknown
    """
    if method not in TABLE_METHODS:
        raise ValueError(
            f"Invalid transform: {method!r}. Must be one of: {', '.join(TABLE_METHODS)}"
        )
    counts = dataset.counts
    if method == "none":
        return counts
    if method == "scale":
        return scale_by_size_factors(counts, ensure_size_factors(dataset).size_factors)
    if method == "anscombe":
        return anscombe(counts, fit_dispersions(dataset, threads))
    if method == "trunc-rank":
        t = counts.n_taxa // 3 if threshold is None else threshold
        return truncated_rank(counts, t)
    return presence_absence(counts, tau)
