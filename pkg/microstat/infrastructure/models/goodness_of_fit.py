"""
Parametric-bootstrap chi-square goodness of fit for the negative binomial.
"""

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from microstat.core.dataset import Dataset
from microstat.shared import ordered_map, spawn
from microstat.shared.errors import DataValidationError, NumericalError, flag
from microstat.shared.random import SeedLike, make_rng
from .negative_binomial import NBParams, fit_nb
from .nbglm import bh_adjust

MIN_EXPECTED = 5.0
MAX_CELLS = 2000
ZERO_EXCESS_Z = 1.645


@dataclass(frozen=True)
class GofResult:
    """
    Goodness-of-fit outcome for one taxon.

    ``p_value`` lies on the (r + 1) / (n_sim + 1) grid. ``p_adjusted`` is the
    BH-adjusted value once gof_all has run (equal to p_value otherwise).
    """

    taxon_id: str
    statistic: float
    p_value: float
    p_adjusted: float
    n_sim: int
    n_bins: int = 0
    mu: float = float("nan")
    k: float = float("nan")
    observed_zeros: int = 0
    expected_zeros: float = float("nan")
    zero_excess: bool = False
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class GofReport:
    """All per-taxon results plus the share of taxa with excess zeros."""

    results: tuple[GofResult, ...]
    zero_excess_fraction: float
    flags: tuple[str, ...] = field(default_factory=tuple)

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {
                "taxon_id": r.taxon_id,
                "mu": r.mu,
                "k": r.k,
                "statistic": r.statistic,
                "n_bins": r.n_bins,
                "p_value": r.p_value,
                "p_adjusted": r.p_adjusted,
                "n_sim": r.n_sim,
                "observed_zeros": r.observed_zeros,
                "expected_zeros": r.expected_zeros,
                "zero_excess": r.zero_excess,
                "flags": ";".join(r.flags),
            }
            for r in self.results
        ]
        return pd.DataFrame(rows)


@dataclass(frozen=True)
class _Binning:
    """Count cells [edges[c], edges[c+1]) grouped into chi-square bins."""

    edges: np.ndarray
    cell_to_bin: np.ndarray
    expected: np.ndarray

    @property
    def n_bins(self) -> int:
        return len(self.expected)

    def bin_of(self, values: np.ndarray) -> np.ndarray:
        cells = np.searchsorted(self.edges, values, side="right") - 1
        cells = np.clip(cells, 0, len(self.cell_to_bin) - 1)
        return self.cell_to_bin[cells]


def _make_binning(
    counts: np.ndarray, params: NBParams, d: np.ndarray, min_expected: float
) -> _Binning:
    """
    Build bins over the observed range.

    Cells run from min(K) to max(K); the first cell absorbs everything
    below and the last everything above. Adjacent cells are merged left to
    right until each bin expects at least ``min_expected`` observations; a
    short remainder joins the previous bin.
    """
    lo, hi = int(counts.min()), int(counts.max())
    if hi - lo + 1 <= MAX_CELLS:
        edges = np.arange(lo, hi + 1)
    else:
        edges = np.unique(np.round(np.linspace(lo, hi, MAX_CELLS)).astype(np.int64))

    p = params.success_probability(d)
    # cdf at each cell's upper end; the last cell is open to infinity
    upper = np.append(edges[1:] - 1, np.iinfo(np.int64).max)
    cdf = stats.nbinom.cdf(upper[:-1, None], params.k, p[None, :]).sum(axis=1)
    cumulative = np.append(cdf, float(len(d)))
    cell_expected = np.diff(np.concatenate(([0.0], cumulative)))
    cell_expected = np.maximum(cell_expected, 0.0)

    cell_to_bin = np.empty(len(edges), dtype=np.int64)
    bins: list[float] = []
    acc = 0.0
    start_of_open = 0
    for c, e in enumerate(cell_expected):
        acc += e
        cell_to_bin[c] = len(bins)
        if acc >= min_expected:
            bins.append(acc)
            acc = 0.0
            start_of_open = c + 1
    if start_of_open < len(edges):
        if bins:
            bins[-1] += acc
            cell_to_bin[start_of_open:] = len(bins) - 1
        else:
            bins.append(acc)

    return _Binning(edges, cell_to_bin, np.array(bins))


def _chi_square(observed_bins: np.ndarray, expected: np.ndarray) -> np.ndarray:
    """Pearson statistic per row of a (rows x bins) observed matrix."""
    return (((observed_bins - expected) ** 2) / expected).sum(axis=-1)


def _bin_counts(binning: _Binning, values: np.ndarray) -> np.ndarray:
    """Observed bin counts for each row of a 2-D array of counts."""
    rows = values.shape[0]
    idx = binning.bin_of(values) + np.arange(rows)[:, None] * binning.n_bins
    return np.bincount(idx.ravel(), minlength=rows * binning.n_bins).reshape(rows, binning.n_bins)


def gof_nb(
    counts: Sequence[int],
    size_factors: Sequence[float],
    n_sim: int = 1000,
    seed: SeedLike = 0,
    refit: bool = False,
    min_expected: float = MIN_EXPECTED,
    taxon_id: str = "",
) -> GofResult:
    """
    Bootstrap chi-square test of a negative binomial fit.

    The statistic is Pearson's chi-square over count bins merged until every
    bin expects at least five observations. Simulated datasets are drawn
    from the fitted NB with the observed size factors; by default the
    observed fit and binning are reused for every replicate, with
    ``refit=True`` each replicate is refitted and rebinned. The p-value is
    (1 + #{simulated >= observed}) / (n_sim + 1).

    Args:
        counts: Observed counts
        size_factors: Size factor per observation
        n_sim: Number of simulated datasets
        seed: Integer seed or SeedSequence
        refit: Refit (mu, k) and rebin for every simulated dataset
        min_expected: Minimum expected count per bin
        taxon_id: Identifier copied to the result

    Returns:
        GofResult: p_adjusted equals p_value

    Raises:
        DataValidationError: If the NB fit fails (all-zero input)
        ValueError: If n_sim < 1
    """
    if n_sim < 1:
        raise ValueError(f"n_sim must be >= 1, got {n_sim}")
    y = np.asarray(counts, dtype=np.int64)
    d = np.asarray(size_factors, dtype=float)
    fit = fit_nb(y, d)
    params = fit.params
    flags = list(fit.flags)

    p = params.success_probability(d)
    zero_prob = stats.nbinom.pmf(0, params.k, p)
    expected_zeros = float(zero_prob.sum())
    zero_sd = float(np.sqrt(np.sum(zero_prob * (1.0 - zero_prob))))
    observed_zeros = int(np.sum(y == 0))
    zero_excess = observed_zeros > expected_zeros + ZERO_EXCESS_Z * zero_sd
    if zero_excess:
        flags.append("zero_excess")

    common = dict(
        taxon_id=taxon_id,
        n_sim=n_sim,
        mu=params.mu,
        k=params.k,
        observed_zeros=observed_zeros,
        expected_zeros=expected_zeros,
        zero_excess=zero_excess,
    )

    binning = _make_binning(y, params, d, min_expected)
    if binning.n_bins < 2:
        flag(f"fewer than 2 chi-square bins for taxon '{taxon_id}'; p set to 1")
        return GofResult(
            statistic=0.0,
            p_value=1.0,
            p_adjusted=1.0,
            n_bins=binning.n_bins,
            flags=tuple(flags + ["degenerate_bins"]),
            **common,
        )

    observed = float(_chi_square(_bin_counts(binning, y[None, :]), binning.expected)[0])
    rng = make_rng(seed)
    simulated = rng.negative_binomial(params.k, p, size=(n_sim, y.size))

    if not refit:
        stats_sim = _chi_square(_bin_counts(binning, simulated), binning.expected)
    else:
        stats_sim = np.empty(n_sim)
        for r, row in enumerate(simulated):
            try:
                sim_params = fit_nb(row, d).params
                sim_binning = _make_binning(row, sim_params, d, min_expected)
            except DataValidationError:
                stats_sim[r] = np.inf
                continue
            if sim_binning.n_bins < 2:
                stats_sim[r] = 0.0
                continue
            stats_sim[r] = _chi_square(
                _bin_counts(sim_binning, row[None, :]), sim_binning.expected
            )[0]

    if not np.isfinite(observed):
        raise NumericalError(f"chi-square statistic is not finite for taxon '{taxon_id}'")
    exceed = int(np.sum(stats_sim >= observed - 1e-10 * max(1.0, observed)))
    p_value = (1.0 + exceed) / (n_sim + 1.0)

    return GofResult(
        statistic=observed,
        p_value=p_value,
        p_adjusted=p_value,
        n_bins=binning.n_bins,
        flags=tuple(flags),
        **common,
    )


def gof_all(
    dataset: Dataset,
    n_sim: int = 1000,
    seed: SeedLike = 0,
    refit: bool = False,
    threads: Optional[int] = None,
) -> GofReport:
    """
    Goodness of fit for every taxon over the biological specimens.

    Taxa are processed independently with their own random substream, so
    results do not depend on the worker count. A taxon whose fit fails
    (e.g. all zeros after removing controls) gets a NaN row flagged
    'fit_failed' and is left out of the BH adjustment.

    Args:
        dataset: Dataset with size factors
        n_sim: Simulated datasets per taxon
        seed: Integer seed
        refit: Full parametric bootstrap (see gof_nb)
        threads: Worker cap (None uses the global setting)

    Returns:
        GofReport: Results in taxon order with BH-adjusted p-values

    Raises:
        DataValidationError: If the dataset has no size factors
    """
    if dataset.size_factors is None:
        raise DataValidationError("goodness of fit needs size factors; compute them first")

    biological = dataset.biological()
    counts = biological.counts.counts
    d = biological.size_factors
    taxa = biological.taxa_ids
    seeds = spawn(seed, len(taxa))

    def run(i: int) -> GofResult:
        try:
            return gof_nb(counts[i], d, n_sim, seeds[i], refit=refit, taxon_id=taxa[i])
        except (DataValidationError, ValueError, NumericalError) as e:
            return GofResult(
                taxon_id=taxa[i],
                statistic=float("nan"),
                p_value=float("nan"),
                p_adjusted=float("nan"),
                n_sim=n_sim,
                flags=(f"fit_failed: {e}",),
            )

    results = ordered_map(run, range(len(taxa)), threads)
    adjusted = bh_adjust([r.p_value for r in results])
    results = [replace(r, p_adjusted=float(a)) for r, a in zip(results, adjusted)]
    fitted = [r for r in results if np.isfinite(r.p_value)]
    fraction = float(np.mean([r.zero_excess for r in fitted])) if fitted else 0.0
    return GofReport(tuple(results), fraction)
