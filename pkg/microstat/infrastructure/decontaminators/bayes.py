"""
Bayesian contamination model with negative controls.

For taxon i in biological specimen j:

    K_ij ~ Poisson((lambda^r_ij + lambda^c_ij) d_j)
    lambda^c_ij ~ Gamma(alpha_i, beta_i)        (estimated from the controls)
    lambda^r_ij ~ reference prior

A cell is called contaminant when the lower end of the lambda^r HPD interval
lies below the upper end of the lambda^c HPD interval.
"""

import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from microstat.core.count_table import CountTable
from microstat.core.dataset import Dataset
from microstat.shared import TransformableMixin, ordered_map
from microstat.shared.errors import DataValidationError, NumericalError, flag
from microstat.shared.random import SeedLike, make_rng, spawn
from microstat.infrastructure.transformers.size_factors import ensure_size_factors
from .base import Decontaminator
from .reference_prior import IntensityPrior, ReferencePrior

FLOOR_ALPHA = 0.01
FLOOR_BETA = 1.0
NORMAL_THINNING_ABOVE = 10_000_000
ADAPT_EVERY = 50
ACCEPTANCE_BAND = (0.3, 0.5)
REPORT_COLUMNS = ["taxon_id", "specimen_id", "L_r", "U_r", "L_c", "U_c", "is_contaminant"]


@dataclass(frozen=True)
class ContamPrior:
    """
    Gamma(alpha, beta) prior (shape, rate) on a taxon's contaminant intensity.

    ``flags`` records 'floor_prior:absent' (never seen in a control) or
    'floor_prior:zero_variance' when the weak floor prior replaced the
    moment estimates.
    """

    alpha: float
    beta: float
    taxon_id: str = ""
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be finite and > 0, got {value}")

    @property
    def is_floor(self) -> bool:
        return any(f.startswith("floor_prior") for f in self.flags)


@dataclass(frozen=True)
class McmcSettings:
    """
    Sampler settings shared by every cell.

    Args:
        chains: Independent chains per cell
        iterations: Iterations per chain, warmup included
        warmup: Leading iterations discarded; the log-scale step size of the
            lambda^r update is adapted during warmup
        thin: Keep every thin-th post-warmup draw
        initial_step: Starting proposal scale on log lambda^r (None picks
            2.4 / sqrt(k + 1), capped at 1.5)
    """

    chains: int = 4
    iterations: int = 2000
    warmup: int = 1000
    thin: int = 1
    initial_step: Optional[float] = None

    def __post_init__(self):
        for name in ("chains", "iterations", "thin"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if not isinstance(self.warmup, (int, np.integer)) or self.warmup < 0:
            raise ValueError(f"warmup must be a non-negative integer, got {self.warmup!r}")
        if self.warmup >= self.iterations:
            raise ValueError(
                f"warmup ({self.warmup}) must be smaller than iterations ({self.iterations})"
            )
        if self.initial_step is not None and not self.initial_step > 0:
            raise ValueError(f"initial_step must be > 0, got {self.initial_step}")

    @property
    def draws_per_chain(self) -> int:
        return len(range(self.warmup, self.iterations, self.thin))


@dataclass(frozen=True)
class PosteriorDraws:
    """
    Post-warmup draws for one cell, shaped (chains, draws).
    """

    lambda_true: np.ndarray
    lambda_contam: np.ndarray
    acceptance_rate: float
    step_size: np.ndarray
    flags: tuple[str, ...] = ()

    @property
    def n_draws(self) -> int:
        return int(self.lambda_true.size)


@dataclass(frozen=True)
class PosteriorSummary:
    """
    HPD intervals and contaminant call for one (taxon, specimen) cell.

    is_contaminant is L^r < U^c. Cells whose sampler failed carry NaN
    intervals, is_contaminant False and a 'sampler_failed' flag.
    """

    taxon_id: str
    specimen_id: str
    hpd_true: tuple[float, float]
    hpd_contam: tuple[float, float]
    is_contaminant: bool
    n_draws: int
    acceptance_rate: float
    count: int = 0
    flags: tuple[str, ...] = ()

    def to_record(self) -> dict:
        return {
            "taxon_id": self.taxon_id,
            "specimen_id": self.specimen_id,
            "L_r": self.hpd_true[0],
            "U_r": self.hpd_true[1],
            "L_c": self.hpd_contam[0],
            "U_c": self.hpd_contam[1],
            "is_contaminant": self.is_contaminant,
            "count": self.count,
            "n_draws": self.n_draws,
            "acceptance_rate": self.acceptance_rate,
            "flags": ";".join(self.flags),
        }


def size_factor_reference(dataset: Dataset) -> np.ndarray:
    """
    Median-of-ratios size factors over all specimens (controls included).

    Existing factors are returned unchanged; otherwise they are computed with
    the pseudo reference fallback of ensure_size_factors.
    """
    return np.asarray(ensure_size_factors(dataset).size_factors)


def estimate_contam_prior(
    controls: CountTable, control_size_factors: Sequence[float]
) -> list[ContamPrior]:
    """
    Method-of-moments gamma fit to the scaled control intensities K0_il / d0_l.

    alpha = mean^2 / var and beta = mean / var (sample variance). A taxon
    never observed in a control, or whose scaled intensities do not vary,
    gets the floor prior Gamma(0.01, 1); the zero-variance case is flagged.

    Args:
        controls: Count table of the negative controls only
        control_size_factors: Size factor per control

    Returns:
        list[ContamPrior]: One prior per taxon, in table order

    Raises:
        DataValidationError: If there are fewer than two controls
    """
    d0 = np.asarray(control_size_factors, dtype=float)
    if controls.n_specimens < 2:
        raise DataValidationError(
            f"contaminant priors need at least 2 negative controls, got {controls.n_specimens}"
        )
    if d0.shape != (controls.n_specimens,):
        raise ValueError(
            f"control_size_factors has length {d0.size}, expected {controls.n_specimens}"
        )
    if not np.all(np.isfinite(d0)) or np.any(d0 <= 0):
        raise ValueError("control size factors must be finite and > 0")

    intensities = controls.counts / d0[None, :]
    means = intensities.mean(axis=1)
    variances = intensities.var(axis=1, ddof=1)

    priors = []
    zero_variance = []
    for taxon, mean, var in zip(controls.taxa_ids, means, variances):
        if mean == 0:
            priors.append(ContamPrior(FLOOR_ALPHA, FLOOR_BETA, taxon, ("floor_prior:absent",)))
        elif var <= 0 or not np.isfinite(var):
            zero_variance.append(taxon)
            priors.append(
                ContamPrior(FLOOR_ALPHA, FLOOR_BETA, taxon, ("floor_prior:zero_variance",))
            )
        else:
            priors.append(ContamPrior(float(mean**2 / var), float(mean / var), taxon))

    if zero_variance:
        flag(
            "zero-variance control intensities; floor prior used for: "
            + ", ".join(zero_variance)
        )
    return priors


def gibbs_step(
    k: np.ndarray,
    d: float,
    lambda_true: np.ndarray,
    lambda_contam: np.ndarray,
    prior: ContamPrior,
    true_prior: IntensityPrior,
    step: np.ndarray,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, bool]:
    """
    One sweep of the sampler for a vector of chains.

    (a) thin the count into a contaminant part, (b) draw lambda^c from its
    gamma full conditional, (c) random-walk Metropolis on log lambda^r
    against Poisson(k - k^c; lambda^r d) times the lambda^r prior.

    Returns:
        tuple: (lambda_true, lambda_contam, accepted mask, used normal approximation)
    """
    k = np.broadcast_to(np.asarray(k, dtype=np.int64), lambda_true.shape)
    share = lambda_contam / (lambda_true + lambda_contam)
    approximated = bool(np.any(k > NORMAL_THINNING_ABOVE))
    if approximated:
        mean = k * share
        sd = np.sqrt(k * share * (1.0 - share))
        k_contam = np.clip(np.rint(mean + sd * rng.standard_normal(k.shape)), 0, k)
        k_contam = k_contam.astype(np.int64)
    else:
        k_contam = rng.binomial(k, share)
    k_true = k - k_contam

    lambda_contam = rng.gamma(prior.alpha + k_contam, 1.0 / (prior.beta + d))

    log_current = np.log(lambda_true)
    log_proposal = log_current + step * rng.standard_normal(lambda_true.shape)
    proposal = np.exp(log_proposal)

    def log_target(lam: np.ndarray, log_lam: np.ndarray) -> np.ndarray:
        # log-scale Jacobian included
        return k_true * log_lam - lam * d + true_prior.log_density(lam) + log_lam

    log_ratio = log_target(proposal, log_proposal) - log_target(lambda_true, log_current)
    accepted = np.log(rng.random(lambda_true.shape)) < log_ratio
    lambda_true = np.where(accepted, proposal, lambda_true)
    return lambda_true, lambda_contam, accepted, approximated


def sample_posterior(
    k: int,
    d: float,
    prior: ContamPrior,
    mcmc: Optional[McmcSettings] = None,
    seed: SeedLike = 0,
    true_prior: Optional[IntensityPrior] = None,
) -> PosteriorDraws:
    """
    Draw (lambda^r, lambda^c) from the posterior of one cell.

    Gibbs-within-Metropolis: binomial thinning of k, a conjugate gamma
    update of lambda^c and a log-scale random-walk Metropolis update of
    lambda^r. During warmup the step size of each chain is multiplied by
    0.7 or 1.4 after every 50 iterations whose acceptance rate fell below
    0.3 or above 0.5. Above k = 1e7 the thinning uses a normal
    approximation (flagged 'normal_approximation').

    Args:
        k: Observed count
        d: Size factor of the specimen
        prior: Contaminant intensity prior of the taxon
        mcmc: Sampler settings (default McmcSettings())
        seed: Integer seed or SeedSequence
        true_prior: Prior on lambda^r (default the reference prior)

    Returns:
        PosteriorDraws: Post-warmup draws, identical for identical inputs

    Raises:
        ValueError: If k < 0 or d <= 0
        NumericalError: If the reference prior cannot be evaluated
    """
    if isinstance(k, (bool, np.bool_)) or int(k) != k or k < 0:
        raise ValueError(f"k must be a non-negative integer, got {k!r}")
    if not math.isfinite(d) or d <= 0:
        raise ValueError(f"d must be finite and > 0, got {d}")
    k = int(k)
    mcmc = mcmc or McmcSettings()
    if true_prior is None:
        true_prior = ReferencePrior.for_count(k, d, prior.alpha, prior.beta)

    rng = make_rng(seed)
    chains = mcmc.chains
    if mcmc.initial_step is not None:
        initial = mcmc.initial_step
    else:
        initial = min(2.4 / math.sqrt(k + 1.0), 1.5)
    step = np.full(chains, initial)

    lambda_true = (k + 0.5) / d * np.exp(0.1 * rng.standard_normal(chains))
    lambda_contam = rng.gamma(prior.alpha, 1.0 / prior.beta, size=chains)

    kept_true = np.empty((chains, mcmc.draws_per_chain))
    kept_contam = np.empty((chains, mcmc.draws_per_chain))
    batch_accepts = np.zeros(chains)
    total_accepts = np.zeros(chains)
    approximated = False
    slot = 0

    for it in range(mcmc.iterations):
        lambda_true, lambda_contam, accepted, approx = gibbs_step(
            k, d, lambda_true, lambda_contam, prior, true_prior, step, rng
        )
        approximated = approximated or approx
        if not np.all(np.isfinite(lambda_true)):
            raise NumericalError(f"lambda^r left the finite range (k={k}, d={d:g})")

        if it < mcmc.warmup:
            batch_accepts += accepted
            if (it + 1) % ADAPT_EVERY == 0:
                rate = batch_accepts / ADAPT_EVERY
                step = np.where(rate < ACCEPTANCE_BAND[0], step * 0.7, step)
                step = np.where(rate > ACCEPTANCE_BAND[1], step * 1.4, step)
                batch_accepts[:] = 0
        else:
            total_accepts += accepted
            if (it - mcmc.warmup) % mcmc.thin == 0:
                kept_true[:, slot] = lambda_true
                kept_contam[:, slot] = lambda_contam
                slot += 1

    flags = ("normal_approximation",) if approximated else ()
    if approximated:
        flag(f"count {k} exceeds {NORMAL_THINNING_ABOVE:g}; thinning used a normal approximation")
    acceptance = float(total_accepts.sum() / (chains * (mcmc.iterations - mcmc.warmup)))
    return PosteriorDraws(kept_true, kept_contam, acceptance, step, flags)


def hpd_interval(draws: np.ndarray, level: float = 0.95) -> tuple[float, float]:
    """
    Shortest interval containing ceil(level * n) of the sorted draws.

    Ties go to the leftmost interval.

    Raises:
        ValueError: If level is outside (0, 1) or there are no draws
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    x = np.sort(np.asarray(draws, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise ValueError("cannot compute an HPD interval from zero draws")
    inside = min(max(int(math.ceil(level * n)), 1), n)
    widths = x[inside - 1 :] - x[: n - inside + 1]
    start = int(np.argmin(widths))
    return float(x[start]), float(x[start + inside - 1])


def summarize_draws(
    draws: PosteriorDraws,
    taxon_id: str,
    specimen_id: str,
    hpd_level: float = 0.95,
    count: int = 0,
) -> PosteriorSummary:
    hpd_true = hpd_interval(draws.lambda_true, hpd_level)
    hpd_contam = hpd_interval(draws.lambda_contam, hpd_level)
    return PosteriorSummary(
        taxon_id=taxon_id,
        specimen_id=specimen_id,
        hpd_true=hpd_true,
        hpd_contam=hpd_contam,
        is_contaminant=hpd_true[0] < hpd_contam[1],
        n_draws=draws.n_draws,
        acceptance_rate=draws.acceptance_rate,
        count=count,
        flags=draws.flags,
    )


def call_contaminants(
    dataset: Dataset,
    mcmc: Optional[McmcSettings] = None,
    hpd_level: float = 0.95,
    seed: SeedLike = 0,
    taxon_level: bool = False,
    threads: Optional[int] = None,
) -> tuple[list[PosteriorSummary], Dataset]:
    """
    Call contaminant cells and zero them in a cleaned copy of the dataset.

    Priors come from the negative controls; every (taxon, biological
    specimen) cell is then sampled with its own random substream (spawned in
    taxon-major order) and summarised by HPD intervals. A failed cell is
    recorded with a 'sampler_failed' flag and left uncalled.

    With ``taxon_level=True`` a taxon is zeroed in every biological specimen
    when at least half of the specimens in which it was observed call it.
    Negative controls are kept unchanged in the cleaned dataset.

    Args:
        dataset: Dataset with at least two negative controls and size factors
        mcmc: Sampler settings
        hpd_level: HPD interval mass
        seed: Integer seed
        taxon_level: Remove whole taxa instead of single cells
        threads: Worker cap (None uses the global setting)

    Returns:
        tuple: (summaries in taxon-major order, cleaned Dataset)

    Raises:
        DataValidationError: If size factors are missing or there are fewer
            than two negative controls
    """
    if dataset.size_factors is None:
        raise DataValidationError("contaminant calls need size factors; compute them first")
    mask = dataset.control_mask()
    if mask.sum() < 2:
        raise DataValidationError(
            f"contaminant calls need at least 2 negative controls, got {int(mask.sum())}"
        )
    if not 0.0 < hpd_level < 1.0:
        raise ValueError(f"hpd_level must lie in (0, 1), got {hpd_level}")
    mcmc = mcmc or McmcSettings()

    controls = dataset.controls()
    priors = estimate_contam_prior(controls.counts, controls.size_factors)

    biological_columns = np.flatnonzero(~mask)
    counts = dataset.counts.counts
    d = dataset.size_factors
    taxa = dataset.taxa_ids
    specimens = dataset.specimen_ids
    cells = [(i, j) for i in range(len(taxa)) for j in biological_columns]
    seeds = spawn(seed, len(cells))

    def run(index: int) -> PosteriorSummary:
        i, j = cells[index]
        k = int(counts[i, j])
        try:
            draws = sample_posterior(k, float(d[j]), priors[i], mcmc, seeds[index])
            summary = summarize_draws(draws, taxa[i], specimens[j], hpd_level, k)
        except (NumericalError, ValueError) as e:
            nan = float("nan")
            summary = PosteriorSummary(
                taxa[i], specimens[j], (nan, nan), (nan, nan), False, 0, nan, k,
                (f"sampler_failed: {e}",),
            )
        if priors[i].is_floor:
            summary = replace(summary, flags=summary.flags + priors[i].flags)
        return summary

    summaries = ordered_map(run, range(len(cells)), threads)

    called = np.zeros(counts.shape, dtype=bool)
    for (i, j), summary in zip(cells, summaries):
        called[i, j] = summary.is_contaminant

    if taxon_level:
        observed = (counts > 0) & ~mask[None, :]
        n_observed = observed.sum(axis=1)
        n_called = (called & observed).sum(axis=1)
        removed = (n_observed > 0) & (n_called >= 0.5 * n_observed)
        called = removed[:, None] & ~mask[None, :]

    cleaned = np.where(called, 0, counts)
    n_contaminant = sum(s.is_contaminant for s in summaries)
    failed = [f"{s.taxon_id}/{s.specimen_id}" for s in summaries if not s.n_draws]
    if failed:
        flag(f"sampler failed for {len(failed)} cell(s): {', '.join(failed[:10])}")
    if n_contaminant == len(summaries) and summaries:
        flag("every cell was called contaminant; check the negative controls")

    return summaries, dataset.with_counts(dataset.counts.with_counts(cleaned))


def contamination_frame(summaries: Sequence[PosteriorSummary]) -> pd.DataFrame:
    """Tabulate summaries; the first columns follow REPORT_COLUMNS."""
    frame = pd.DataFrame([s.to_record() for s in summaries])
    if frame.empty:
        return pd.DataFrame(columns=REPORT_COLUMNS)
    return frame


class BayesianDecontaminator(Decontaminator, TransformableMixin):
    """
    Decontaminator backed by :func:`call_contaminants`.

    Size factors are computed by median of ratios when the dataset carries
    none.

    Args:
        mcmc: Sampler settings
        hpd_level: HPD interval mass (default 0.95)
        seed: Integer seed
        taxon_level: Remove whole taxa instead of single cells
        threads: Worker cap
        transformers: Optional dict of transformer lists; 'before' runs on the
            input dataset, 'after' on the cleaned one
    """

    def __init__(
        self,
        mcmc: Optional[McmcSettings] = None,
        hpd_level: float = 0.95,
        seed: int = 0,
        taxon_level: bool = False,
        threads: Optional[int] = None,
        transformers: Optional[Dict[str, List[Callable]]] = None,
    ):
        if mcmc is not None and not isinstance(mcmc, McmcSettings):
            raise TypeError(f"mcmc must be McmcSettings, got {type(mcmc).__name__}")
        if not 0.0 < hpd_level < 1.0:
            raise ValueError(f"hpd_level must lie in (0, 1), got {hpd_level}")

        self.mcmc: McmcSettings = mcmc or McmcSettings()
        self.hpd_level: float = hpd_level
        self.seed: int = seed
        self.taxon_level: bool = taxon_level
        self.threads: Optional[int] = threads
        self.transformers: dict[str, list[Callable]] = transformers or {}
        self.summaries: list[PosteriorSummary] = []

    def decontaminate(self, dataset: Dataset) -> tuple[list[PosteriorSummary], Dataset]:
        dataset = self._apply_transformers(dataset, "before")
        if dataset.size_factors is None:
            dataset = dataset.with_size_factors(size_factor_reference(dataset))
        summaries, cleaned = call_contaminants(
            dataset,
            self.mcmc,
            self.hpd_level,
            self.seed,
            taxon_level=self.taxon_level,
            threads=self.threads,
        )
        self.summaries = summaries
        return summaries, self._apply_transformers(cleaned, "after")
