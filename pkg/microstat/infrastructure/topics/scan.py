"""
Held-out likelihood scan over candidate topic numbers.
"""

import logging
from dataclasses import replace
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from microstat.core.count_table import CountTable
from microstat.shared.errors import DataValidationError
from microstat.shared.random import make_rng
from .fit import LdaSpec, TopicFit
from .lda import fit_lda

logger = logging.getLogger(__name__)


def holdout_split(
    counts: CountTable, fraction: float, seed: int = 0
) -> tuple[CountTable, np.ndarray]:
    """
    Thin every cell: K_ij held out ~ Binomial(K_ij, fraction), the rest trains.

    Raises:
        DataValidationError: If a specimen keeps no training reads
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"holdout fraction must lie in (0, 1), got {fraction}")
    heldout = make_rng(seed).binomial(counts.counts, fraction)
    train = counts.counts - heldout
    empty = np.flatnonzero(train.sum(axis=0) == 0)
    if empty.size:
        raise DataValidationError(
            f"specimen '{counts.specimen_ids[empty[0]]}' has no reads left for training"
        )
    return counts.with_counts(train), heldout


def heldout_log_likelihood(fit: TopicFit, heldout: np.ndarray) -> float:
    """
    Mean log-probability per held-out token under the posterior mean theta and beta.

    Specimen j's held-out tokens are scored against sum_t theta_jt beta_tw.
    """
    theta = fit.theta_draws().mean(axis=0)
    beta = fit.mean_beta()
    log_p = np.log(theta @ beta)
    n_tokens = heldout.sum()
    if n_tokens == 0:
        return float("nan")
    return float(np.sum(heldout.T * log_p) / n_tokens)


def scan_topics(
    counts: CountTable,
    T_grid: Sequence[int],
    spec: LdaSpec,
    holdout_fraction: float = 0.2,
    holdout_seed: int = 0,
    threads: Optional[int] = None,
) -> pd.DataFrame:
    """
    Document-completion scan: fit each T on training reads, score held-out reads.

    The same split is used for every T. No T is chosen; higher per-token
    log-likelihood is better.

    Args:
        counts: Count table
        T_grid: Topic numbers to try
        spec: Sampler settings (T is replaced per grid point)
        holdout_fraction: Share of reads held out
        holdout_seed: Seed for the split
        threads: Worker cap for chains

    Returns:
        pd.DataFrame: T, heldout_ll_per_token, n_heldout_tokens
    """
    grid = [int(t) for t in T_grid]
    if not grid:
        raise ValueError("T_grid must not be empty")
    train, heldout = holdout_split(counts, holdout_fraction, holdout_seed)

    records = []
    for n_topics in grid:
        logger.info("scanning T=%d", n_topics)
        fit = fit_lda(train, replace(spec, T=n_topics), threads)
        records.append(
            {
                "T": n_topics,
                "heldout_ll_per_token": heldout_log_likelihood(fit, heldout),
                "n_heldout_tokens": int(heldout.sum()),
            }
        )
    return pd.DataFrame(records)
