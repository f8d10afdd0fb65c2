"""
Rank-based and binary transforms.
"""

import numpy as np
from scipy.stats import rankdata

from microstat.core.count_table import CountTable
from microstat.core.transformed import TransformedTable, TransformTag


def truncated_rank(counts: CountTable, threshold: int) -> TransformedTable:
    """
    Within-specimen ranks with everything below a threshold tied at one.

    Ranks are ascending (the most abundant taxon gets m) with average ranks
    for ties; the score is max(rank - t, 1).

    Args:
        counts: Count table with m taxa
        threshold: t, 0 <= t < m

    Raises:
        ValueError: If t is outside [0, m)
    """
    if not isinstance(threshold, (int, np.integer)) or isinstance(threshold, bool):
        raise TypeError(f"threshold must be an integer, got {type(threshold).__name__}")
    if not 0 <= threshold < counts.n_taxa:
        raise ValueError(f"threshold must satisfy 0 <= t < {counts.n_taxa}, got {threshold}")

    ranks = rankdata(counts.counts, method="average", axis=0)
    values = np.maximum(ranks - threshold, 1.0)
    return TransformedTable.like(
        counts, values, TransformTag.TRUNCATED_RANK, {"t": int(threshold)}
    )


def presence_absence(counts: CountTable, tau: int = 2) -> TransformedTable:
    """
    B_ij = 1 if K_ij >= tau else 0.

    Raises:
        ValueError: If tau < 1
    """
    if not isinstance(tau, (int, np.integer)) or isinstance(tau, bool):
        raise TypeError(f"tau must be an integer, got {type(tau).__name__}")
    if tau < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")

    values = (counts.counts >= tau).astype(float)
    return TransformedTable.like(counts, values, TransformTag.PRESENCE_ABSENCE, {"tau": int(tau)})
