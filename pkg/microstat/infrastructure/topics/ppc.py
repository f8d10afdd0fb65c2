"""
Posterior predictive checks with the per-taxon maximum statistic.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from microstat.core.count_table import CountTable
from microstat.shared import ordered_map
from microstat.shared.errors import DataValidationError
from microstat.shared.random import make_rng, spawn
from .fit import TopicFit


@dataclass(frozen=True)
class PpcResult:
    """
    Observed and replicated per-taxon maxima.

    Args:
        taxa_ids: Taxon identifiers
        observed_max: G_obs per taxon (max over specimens)
        replicate_max: G_rep per retained draw and taxon
        tail_probability: P(G_rep >= G_obs) per taxon
        draw_indices: Pooled draw indices that were replicated
        seed: Integer seed
    """

    taxa_ids: tuple[str, ...]
    observed_max: np.ndarray
    replicate_max: np.ndarray
    tail_probability: np.ndarray
    draw_indices: np.ndarray
    seed: int

    def to_frame(self) -> pd.DataFrame:
        n_draws = self.replicate_max.shape[0]
        spread = self.replicate_max.std(axis=0, ddof=1) if n_draws > 1 else np.nan
        return pd.DataFrame(
            {
                "taxon_id": list(self.taxa_ids),
                "observed_max": self.observed_max,
                "replicate_mean": self.replicate_max.mean(axis=0),
                "replicate_sd": spread,
                "tail_probability": self.tail_probability,
                "n_draws": n_draws,
            }
        )


def _retained_draws(total: int, max_draws: Optional[int]) -> np.ndarray:
    if max_draws is None or max_draws >= total:
        return np.arange(total)
    return np.unique(np.linspace(0, total - 1, max_draws).round().astype(np.int64))


def posterior_predictive_check(
    fit: TopicFit,
    counts: CountTable,
    max_draws: Optional[int] = 200,
    seed: int = 0,
    threads: Optional[int] = None,
) -> PpcResult:
    """
    Compare the observed per-taxon maximum with replicates from the posterior.

    For each retained draw a replicate table is simulated with specimen j
    drawn from Multinomial(S_j, B theta_j), S_j being the library size the
    model was fitted to. Retained draws are spread evenly over the pooled
    chains; each gets its own spawned stream.

    Args:
        fit: Fitted topic model
        counts: Observed table with the fit's taxa and specimens
        max_draws: Cap on replicated draws (None uses all)
        seed: Integer seed
        threads: Worker cap

    Returns:
        PpcResult: Tail probability per taxon

    Raises:
        DataValidationError: If counts do not match the fit's identifiers
    """
    if not isinstance(fit, TopicFit):
        raise TypeError(f"Expected TopicFit, got {type(fit).__name__}")
    if not isinstance(counts, CountTable):
        raise TypeError(f"Expected CountTable, got {type(counts).__name__}")
    if counts.taxa_ids != fit.taxa_ids or counts.specimen_ids != fit.specimen_ids:
        raise DataValidationError(
            "observed counts must have the fitted taxa and specimens in order"
        )
    if max_draws is not None and max_draws < 1:
        raise ValueError(f"max_draws must be positive, got {max_draws}")

    theta = fit.theta_draws()
    beta = fit.beta_draws()
    indices = _retained_draws(theta.shape[0], max_draws)
    sizes = np.asarray(fit.library_sizes, dtype=np.int64)
    streams = spawn(seed, indices.size)

    def replicate(item: tuple[int, np.random.SeedSequence]) -> np.ndarray:
        draw, stream = item
        p = theta[draw] @ beta[draw]
        p = p / p.sum(axis=1, keepdims=True)
        table = make_rng(stream).multinomial(sizes, p)
        return table.max(axis=0)

    replicate_max = np.stack(ordered_map(replicate, list(zip(indices, streams)), threads))
    observed_max = counts.counts.max(axis=1)
    tail = np.mean(replicate_max >= observed_max[None, :], axis=0)
    return PpcResult(
        taxa_ids=fit.taxa_ids,
        observed_max=observed_max,
        replicate_max=replicate_max,
        tail_probability=tail,
        draw_indices=indices,
        seed=int(seed),
    )
