"""
Convergence diagnostics: rank-normalized split-R-hat and bulk effective sample size.

Draw arrays are chains x draws x parameters. Each chain is split in half
(the middle draw of an odd chain is dropped) and the pooled draws of every
parameter are replaced by normal scores of their ranks before the classic
between/within variance comparison.
"""

from typing import Sequence

import numpy as np
import pandas as pd
from scipy import stats

from microstat.shared.errors import flag
from .fit import TopicFit

MIN_DRAWS = 4
SUMMARY_QUANTILES = (0.05, 0.5, 0.95)


def _split_chains(draws: np.ndarray) -> np.ndarray:
    half = draws.shape[1] // 2
    return np.concatenate([draws[:, :half], draws[:, draws.shape[1] - half :]], axis=0)


def rank_normalize(draws: np.ndarray) -> np.ndarray:
    """Normal scores of pooled ranks, parameter by parameter (ties averaged)."""
    chains, n, p = draws.shape
    pooled = draws.reshape(chains * n, p)
    ranks = stats.rankdata(pooled, axis=0)
    scores = stats.norm.ppf((ranks - 0.375) / (chains * n + 0.25))
    return scores.reshape(chains, n, p)


def _rhat(draws: np.ndarray) -> np.ndarray:
    n = draws.shape[1]
    between = n * draws.mean(axis=1).var(axis=0, ddof=1)
    within = draws.var(axis=1, ddof=1).mean(axis=0)
    var_plus = (n - 1) / n * within + between / n
    with np.errstate(divide="ignore", invalid="ignore"):
        rhat = np.sqrt(var_plus / within)
    # variances below rounding noise of the draws count as zero
    tolerance = np.finfo(float).eps * np.maximum(1.0, np.abs(draws).max(axis=(0, 1))) ** 2
    degenerate = within <= tolerance
    rhat[degenerate & (between > tolerance)] = np.inf
    rhat[degenerate & (between <= tolerance)] = np.nan
    return rhat


def split_rhat(draws: np.ndarray) -> np.ndarray:
    """
    Rank-normalized split-R-hat per parameter.

    The larger of the bulk and folded (|x - median|) values. Constant draws
    give NaN; chains stuck at different constants give infinity.
    """
    split = _split_chains(np.asarray(draws, dtype=float))
    bulk = _rhat(rank_normalize(split))
    folded_draws = np.abs(split - np.median(split.reshape(-1, split.shape[2]), axis=0))
    folded = _rhat(rank_normalize(folded_draws))
    return np.where(np.isnan(folded), bulk, np.maximum(bulk, folded))


def _autocovariance(draws: np.ndarray) -> np.ndarray:
    n = draws.shape[1]
    centred = draws - draws.mean(axis=1, keepdims=True)
    size = 1 << int(np.ceil(np.log2(2 * n)))
    spectrum = np.fft.rfft(centred, n=size, axis=1)
    return np.fft.irfft(spectrum * np.conj(spectrum), n=size, axis=1)[:, :n] / n


def _ess(draws: np.ndarray) -> np.ndarray:
    chains, n, _ = draws.shape
    acov = _autocovariance(draws)
    chain_var = acov[:, 0] * n / (n - 1)
    within = chain_var.mean(axis=0)
    var_plus = within * (n - 1) / n
    if chains > 1:
        var_plus = var_plus + draws.mean(axis=1).var(axis=0, ddof=1)

    with np.errstate(divide="ignore", invalid="ignore"):
        rho = 1.0 - (within - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0

    # Geyer's initial monotone sequence over lag pairs
    n_pairs = n // 2
    pairs = rho[0 : 2 * n_pairs : 2] + rho[1 : 2 * n_pairs : 2]
    positive = np.cumprod(pairs > 0, axis=0).astype(bool)
    monotone = np.minimum.accumulate(np.where(positive, pairs, np.inf), axis=0)
    tau = -1.0 + 2.0 * np.where(positive, monotone, 0.0).sum(axis=0)
    tau = np.maximum(tau, 1.0 / np.log10(chains * n))
    ess = chains * n / tau
    ess[~(var_plus > 0)] = np.nan
    return ess


def ess_bulk(draws: np.ndarray) -> np.ndarray:
    """Bulk effective sample size per parameter, on rank-normalized split chains."""
    split = _split_chains(np.asarray(draws, dtype=float))
    return _ess(rank_normalize(split))


def _parameter_names(fit: TopicFit) -> list[str]:
    topics = fit.topic_ids
    names = [f"theta[{s},{t}]" for s in fit.specimen_ids for t in topics]
    names += [f"beta[{t},{w}]" for t in topics for w in fit.taxa_ids]
    return names


def diagnostics(
    fit: TopicFit, quantiles: Sequence[float] = SUMMARY_QUANTILES
) -> pd.DataFrame:
    """
    Split-R-hat, bulk ESS and posterior quantiles for every theta and beta component.

    Args:
        fit: Fit with at least 2 chains of at least 4 draws (align first)
        quantiles: Posterior quantiles to report

    Returns:
        pd.DataFrame: parameter, mean, q<percent>..., rhat, ess_bulk, flags

    Raises:
        ValueError: If there are too few chains or draws
    """
    if not isinstance(fit, TopicFit):
        raise TypeError(f"Expected TopicFit, got {type(fit).__name__}")
    if fit.n_chains < 2:
        raise ValueError(f"diagnostics need at least 2 chains, got {fit.n_chains}")
    if fit.n_draws < MIN_DRAWS:
        raise ValueError(
            f"diagnostics need at least {MIN_DRAWS} draws per chain, got {fit.n_draws}"
        )

    chains, n = fit.n_chains, fit.n_draws
    draws = np.concatenate(
        [fit.theta.reshape(chains, n, -1), fit.beta.reshape(chains, n, -1)], axis=2
    )
    rhat = split_rhat(draws)
    ess = ess_bulk(draws)

    frame = pd.DataFrame({"parameter": _parameter_names(fit), "mean": draws.mean(axis=(0, 1))})
    pooled = draws.reshape(chains * n, -1)
    for q, values in zip(quantiles, np.quantile(pooled, quantiles, axis=0)):
        frame[f"q{q * 100:g}"] = values
    frame["rhat"] = rhat
    frame["ess_bulk"] = ess
    undefined = np.isnan(rhat)
    frame["flags"] = np.where(undefined, "rhat_undefined", "")

    if undefined.any():
        flag(f"split-R-hat is undefined for {int(undefined.sum())} constant parameter(s)")
    return frame
