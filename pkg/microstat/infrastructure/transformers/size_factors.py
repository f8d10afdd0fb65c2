"""
Library-size scaling by the median-of-ratios method.
"""

from typing import Sequence

import numpy as np

from microstat.core.count_table import CountTable
from microstat.core.dataset import Dataset
from microstat.core.transformed import TransformedTable, TransformTag
from microstat.shared.errors import DataValidationError, flag


def median_of_ratios(counts: CountTable, pseudo_reference: bool = False) -> np.ndarray:
    """
    Per-specimen size factors d_j.

    The reference for taxon i is the geometric mean g_i of its counts over
    specimens, using only taxa positive in every specimen. d_j is the median
    over taxa of K_ij / g_i, and the factors are rescaled to a geometric
    mean of one.

    With ``pseudo_reference`` g_i is the geometric mean over the positive
    entries of row i, and each specimen's median runs over its positive
    entries, so sparse tables without an all-positive taxon still work.

    Args:
        counts: Count table
        pseudo_reference: Use positive-entry geometric means

    Returns:
        np.ndarray: Size factors in specimen order

    Raises:
        DataValidationError: If no taxon is positive in every specimen (and
            pseudo_reference is off), or a specimen has no positive count
    """
    if not isinstance(counts, CountTable):
        raise TypeError(f"Expected CountTable, got {type(counts).__name__}")

    values = counts.counts.astype(float)
    positive = values > 0
    with np.errstate(divide="ignore"):
        logs = np.log(values)

    if not pseudo_reference:
        rows = positive.all(axis=1)
        if not rows.any():
            raise DataValidationError(
                "no taxon has positive counts in every specimen; "
                "use the pseudo-reference option"
            )
        log_ref = logs[rows].mean(axis=1)
        log_ratios = logs[rows] - log_ref[:, None]
        log_d = np.median(log_ratios, axis=0)
    else:
        n_pos = positive.sum(axis=1)
        rows = n_pos > 0
        log_ref = np.where(positive, logs, 0.0)[rows].sum(axis=1) / n_pos[rows]
        log_ratios = np.where(positive[rows], logs[rows] - log_ref[:, None], np.nan)
        empty = [s for s, ok in zip(counts.specimen_ids, positive.any(axis=0)) if not ok]
        if empty:
            raise DataValidationError(f"specimen(s) with zero reads: {', '.join(empty)}")
        log_d = np.nanmedian(log_ratios, axis=0)

    log_d -= log_d.mean()
    return np.exp(log_d)


def ensure_size_factors(dataset: Dataset) -> Dataset:
    """
    Return the dataset with size factors, computing them when absent.

    Falls back to the pseudo reference (with a StatisticalWarning) when no
    taxon is positive in every specimen.
    """
    if dataset.size_factors is not None:
        return dataset
    try:
        factors = median_of_ratios(dataset.counts)
    except DataValidationError:
        flag("no taxon is positive in every specimen; size factors use the pseudo reference")
        factors = median_of_ratios(dataset.counts, pseudo_reference=True)
    return dataset.with_size_factors(factors)


def scale_by_size_factors(counts: CountTable, size_factors: Sequence[float]) -> TransformedTable:
    """
    Divide every column by its size factor.

    Raises:
        DataValidationError: If the length does not match or a factor is not
            positive
    """
    d = np.asarray(size_factors, dtype=float)
    if d.shape != (counts.n_specimens,):
        raise DataValidationError(
            f"size_factors has length {d.size}, expected {counts.n_specimens}"
        )
    if not np.all(np.isfinite(d)) or np.any(d <= 0):
        raise DataValidationError("size factors must be finite and > 0")
    return TransformedTable.like(
        counts, counts.counts / d[None, :], TransformTag.SCALED, {"size_factors": d.tolist()}
    )
