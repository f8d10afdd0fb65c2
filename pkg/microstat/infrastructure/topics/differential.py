"""
Differential topic abundance and per-topic summaries.
"""

from typing import Optional, Sequence

import numpy as np
import pandas as pd

from microstat.core.count_table import CountTable
from microstat.infrastructure.models.nbglm import WaldRow, wald_frame, wald_test
from microstat.infrastructure.transformers.size_factors import median_of_ratios
from .fit import TopicFit

DIFFERENTIAL_COLUMNS = ["Topic", "lfc", "lfcSE", "WTS", "pvalue", "p.adj"]


def topic_counts(fit: TopicFit, library_sizes: Optional[Sequence[int]] = None) -> CountTable:
    """
    Topic x specimen pseudo-counts c_tj = round(median theta_jt * S_j).

    Rounding is half-to-even. Rows may be all zero.
    """
    sizes = fit.library_sizes if library_sizes is None else np.asarray(library_sizes)
    if sizes.shape != (len(fit.specimen_ids),):
        raise ValueError(f"need {len(fit.specimen_ids)} library sizes, got {sizes.shape}")
    counts = np.rint(fit.median_theta().T * sizes[None, :].astype(float)).astype(np.int64)
    return CountTable(fit.topic_ids, fit.specimen_ids, counts)


def differential_topic_rows(
    fit: TopicFit,
    groups: Sequence[Optional[str]],
    library_sizes: Optional[Sequence[int]] = None,
    threads: Optional[int] = None,
) -> list[WaldRow]:
    """
    NB GLM Wald tests of each topic's pseudo-counts between two groups.

    Size factors come from the pseudo-reference median of ratios on the
    topic table.
    """
    table = topic_counts(fit, library_sizes)
    size_factors = median_of_ratios(table, pseudo_reference=True)
    return wald_test(table, groups, size_factors, threads=threads)


def differential_topics(
    fit: TopicFit,
    groups: Sequence[Optional[str]],
    library_sizes: Optional[Sequence[int]] = None,
    threads: Optional[int] = None,
) -> pd.DataFrame:
    """
    Per-topic differential abundance table.

    Args:
        fit: Fitted topic model
        groups: Two-level group label per specimen, in the fit's order
        library_sizes: S_j per specimen (defaults to the fitted sizes)
        threads: Worker cap

    Returns:
        pd.DataFrame: Topic, lfc, lfcSE, WTS, pvalue, p.adj
    """
    rows = differential_topic_rows(fit, groups, library_sizes, threads)
    return wald_frame(rows, id_column="Topic")[DIFFERENTIAL_COLUMNS]


def topic_proportions_frame(fit: TopicFit) -> pd.DataFrame:
    """Posterior median topic proportions, one row per specimen."""
    frame = pd.DataFrame(fit.median_theta(), columns=list(fit.topic_ids))
    frame.insert(0, "specimen_id", list(fit.specimen_ids))
    return frame


def top_taxa_frame(fit: TopicFit, n_top: int = 10) -> pd.DataFrame:
    """The n_top taxa of each topic by posterior mean probability."""
    if n_top < 1:
        raise ValueError(f"n_top must be positive, got {n_top}")
    beta = fit.mean_beta()
    records = []
    for topic, row in zip(fit.topic_ids, beta):
        order = np.argsort(-row, kind="stable")[:n_top]
        for rank, w in enumerate(order, start=1):
            records.append(
                {
                    "Topic": topic,
                    "rank": rank,
                    "taxon_id": fit.taxa_ids[w],
                    "probability": float(row[w]),
                }
            )
    return pd.DataFrame(records)
