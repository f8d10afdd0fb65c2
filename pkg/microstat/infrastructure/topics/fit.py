"""
Topic model settings, fitted posteriors and their JSON documents.

A fit document (``format`` = "microstat-topic-fit", ``version`` = 1) stores
the settings, identifiers, library sizes and every posterior draw. Arrays are
written as base64 little-endian float64 (int64 for permutations) so draws
survive a write/read cycle bit for bit. The dataset the model was fitted to
is embedded under ``dataset`` so downstream commands need only the fit file.
"""

import base64
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

import numpy as np
import pandas as pd

from microstat.core.dataset import Dataset
from microstat.infrastructure.data.readers.files import dataset_from_payload
from microstat.infrastructure.data.writers.files import dataset_to_payload
from microstat.shared.errors import DataValidationError

FIT_FORMAT = "microstat-topic-fit"
FIT_VERSION = 1


@dataclass(frozen=True)
class LdaSpec:
    """
    Settings for a collapsed Gibbs LDA fit.

    Args:
        T: Number of topics
        alpha: Symmetric Dirichlet concentration of topic proportions
        gamma: Symmetric Dirichlet concentration of topic-taxon distributions
        chains: Independent chains
        iters: Sweeps per chain, warmup included
        warmup: Sweeps discarded before draws are kept
        seed: Integer seed; chain c uses the c-th spawned stream
        thin: Keep every thin-th post-warmup sweep
    """

    T: int
    alpha: float = 0.8
    gamma: float = 0.5
    chains: int = 4
    iters: int = 2000
    warmup: int = 1000
    seed: int = 0
    thin: int = 1

    def __post_init__(self):
        for name in ("T", "chains", "iters", "thin"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if not isinstance(self.warmup, (int, np.integer)) or self.warmup < 0:
            raise ValueError(f"warmup must be a non-negative integer, got {self.warmup!r}")
        if self.warmup >= self.iters:
            raise ValueError(f"warmup ({self.warmup}) must be smaller than iters ({self.iters})")
        for name in ("alpha", "gamma"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")

    @property
    def draws_per_chain(self) -> int:
        return len(range(self.warmup, self.iters, self.thin))

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def topic_ids(n_topics: int) -> tuple[str, ...]:
    return tuple(f"Topic_{t + 1}" for t in range(n_topics))


@dataclass(frozen=True)
class TopicFit:
    """
    Posterior draws of an LDA fit.

    Args:
        taxa_ids: Taxon identifiers (length m)
        specimen_ids: Specimen identifiers (length N)
        spec: Settings the fit was run with
        library_sizes: S_j per specimen
        theta: Topic proportions, chains x draws x N x T
        beta: Topic-taxon distributions, chains x draws x T x m
        log_likelihood: Joint log p(tokens, assignments) per sweep,
            chains x iters
        permutations: Per chain, the sampler's topic index behind each
            reported topic (identity until aligned)
        aligned: Whether align_chains has been applied
        convergence: Per-parameter split-R-hat and bulk ESS (see diagnostics)
        flags: Conditions raised while fitting
    """

    taxa_ids: tuple[str, ...]
    specimen_ids: tuple[str, ...]
    spec: LdaSpec
    library_sizes: np.ndarray
    theta: np.ndarray
    beta: np.ndarray
    log_likelihood: np.ndarray
    permutations: np.ndarray
    aligned: bool = False
    convergence: Optional[pd.DataFrame] = field(default=None, compare=False)
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        n, m = len(self.specimen_ids), len(self.taxa_ids)
        if self.theta.ndim != 4 or self.theta.shape[2] != n:
            raise ValueError(f"theta must be chains x draws x {n} x T, got {self.theta.shape}")
        c, d, _, t = self.theta.shape
        if self.beta.shape != (c, d, t, m):
            raise ValueError(f"beta shape {self.beta.shape} does not match {(c, d, t, m)}")
        if self.permutations.shape != (c, t):
            raise ValueError(f"permutations shape {self.permutations.shape} != {(c, t)}")
        if np.asarray(self.library_sizes).shape != (n,):
            raise ValueError(f"library_sizes must have length {n}")

    @property
    def n_chains(self) -> int:
        return self.theta.shape[0]

    @property
    def n_draws(self) -> int:
        """Draws per chain."""
        return self.theta.shape[1]

    @property
    def n_topics(self) -> int:
        return self.theta.shape[3]

    @property
    def topic_ids(self) -> tuple[str, ...]:
        return topic_ids(self.n_topics)

    def theta_draws(self) -> np.ndarray:
        """All chains pooled: (chains * draws) x N x T."""
        return self.theta.reshape(-1, *self.theta.shape[2:])

    def beta_draws(self) -> np.ndarray:
        """All chains pooled: (chains * draws) x T x m."""
        return self.beta.reshape(-1, *self.beta.shape[2:])

    def median_theta(self) -> np.ndarray:
        """Posterior median topic proportions, N x T."""
        return np.median(self.theta_draws(), axis=0)

    def mean_beta(self) -> np.ndarray:
        """Posterior mean topic-taxon distributions, T x m."""
        return self.beta_draws().mean(axis=0)


def _encode(array: np.ndarray, dtype: str) -> dict[str, Any]:
    values = np.ascontiguousarray(array, dtype=dtype)
    return {
        "dtype": dtype,
        "shape": list(values.shape),
        "data": base64.b64encode(values.tobytes()).decode("ascii"),
    }


def _decode(payload: Any, name: str) -> np.ndarray:
    try:
        raw = base64.b64decode(payload["data"])
        return np.frombuffer(raw, dtype=payload["dtype"]).reshape(payload["shape"]).copy()
    except (KeyError, TypeError, ValueError) as e:
        raise DataValidationError(f"fit document has a malformed '{name}' array: {e}") from None


def fit_to_payload(fit: TopicFit, dataset: Optional[Dataset] = None) -> dict[str, Any]:
    """Convert a TopicFit (and optionally its dataset) into a JSON document."""
    convergence = None
    if fit.convergence is not None:
        convergence = fit.convergence.to_dict(orient="list")
    return {
        "format": FIT_FORMAT,
        "version": FIT_VERSION,
        "spec": fit.spec.to_dict(),
        "taxa_ids": list(fit.taxa_ids),
        "specimen_ids": list(fit.specimen_ids),
        "library_sizes": [int(s) for s in fit.library_sizes],
        "theta": _encode(fit.theta, "<f8"),
        "beta": _encode(fit.beta, "<f8"),
        "log_likelihood": _encode(fit.log_likelihood, "<f8"),
        "permutations": _encode(fit.permutations, "<i8"),
        "aligned": bool(fit.aligned),
        "convergence": convergence,
        "flags": list(fit.flags),
        "dataset": None if dataset is None else dataset_to_payload(dataset),
    }


def fit_from_payload(payload: Any) -> tuple[TopicFit, Optional[Dataset]]:
    """
    Rebuild a TopicFit and its embedded dataset from a JSON document.

    Raises:
        DataValidationError: If the document is not a microstat topic fit
    """
    if not isinstance(payload, dict) or payload.get("format") != FIT_FORMAT:
        raise DataValidationError(f"not a {FIT_FORMAT} document")
    if payload.get("version") != FIT_VERSION:
        raise DataValidationError(f"unsupported fit version {payload.get('version')!r}")
    try:
        spec = LdaSpec(**payload["spec"])
        convergence = payload.get("convergence")
        fit = TopicFit(
            taxa_ids=tuple(payload["taxa_ids"]),
            specimen_ids=tuple(payload["specimen_ids"]),
            spec=spec,
            library_sizes=np.asarray(payload["library_sizes"], dtype=np.int64),
            theta=_decode(payload["theta"], "theta"),
            beta=_decode(payload["beta"], "beta"),
            log_likelihood=_decode(payload["log_likelihood"], "log_likelihood"),
            permutations=_decode(payload["permutations"], "permutations"),
            aligned=bool(payload.get("aligned", False)),
            convergence=None if convergence is None else pd.DataFrame(convergence),
            flags=tuple(payload.get("flags", ())),
        )
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, DataValidationError):
            raise
        raise DataValidationError(f"malformed fit document: {e}") from None

    dataset = payload.get("dataset")
    return fit, None if dataset is None else dataset_from_payload(dataset)
