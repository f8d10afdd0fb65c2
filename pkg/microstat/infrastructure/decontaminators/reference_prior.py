"""
Priors for the true intensity lambda^r of the contamination model.

Given lambda^r the observed count is the sum of a Poisson(lambda^r d) true
part and a gamma-mixed Poisson contaminant part, i.e. a negative binomial
with shape alpha_c and success probability beta_c / (beta_c + d). The
reference prior is proportional to the square root of the Fisher
information of that marginal with respect to lambda^r.

Because d/dlambda Poisson(j; lambda d) = d (Poisson(j-1) - Poisson(j)), the
marginal pmf p satisfies dp(k)/dlambda = d (p(k-1) - p(k)), which gives

    I(lambda) = d^2 * sum_k (p(k-1) - p(k))^2 / p(k)

evaluated over the support of p up to a 1e-14 tail mass.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Protocol

import numpy as np
from scipy import signal, stats
from scipy.interpolate import CubicSpline

from microstat.shared.errors import NumericalError

EPSILON = 1e-8
TAIL_MASS = 1e-14
NORMAL_SUPPORT = 2_000_000
DIRECT_CONVOLUTION = 256
GRID_POINTS = 48


class IntensityPrior(Protocol):
    """Anything with an (unnormalised) log density over lambda > 0."""

    def log_density(self, lam: np.ndarray) -> np.ndarray:
        ...


@dataclass(frozen=True)
class GammaPrior:
    """
    Gamma(shape, rate) prior on lambda^r.

    Used in place of the reference prior when a proper prior is needed, e.g.
    for joint-distribution checks of the sampler.
    """

    shape: float
    rate: float

    def __post_init__(self):
        for name in ("shape", "rate"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be finite and > 0, got {value}")

    def log_density(self, lam: np.ndarray) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        return (self.shape - 1.0) * np.log(lam) - self.rate * lam

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        return rng.gamma(self.shape, 1.0 / self.rate, size=size)


def _normal_information(lam: float, d: float, alpha: float, beta: float) -> float:
    # Gaussian approximation: mean (lam + alpha/beta) d, variance
    # lam d + alpha d / beta + alpha d^2 / beta^2
    variance = lam * d + alpha * d / beta + alpha * d * d / (beta * beta)
    return d * d / variance + d * d / (2.0 * variance * variance)


def marginal_pmf(lam: float, d: float, alpha: float, beta: float) -> np.ndarray:
    """
    pmf of the observed count over 0..K where K covers all but 1e-14 of the mass.

    Raises:
        NumericalError: If the support is too long to enumerate
    """
    mean_true = lam * d
    success = beta / (beta + d)
    top_true = max(int(stats.poisson.isf(TAIL_MASS, mean_true)), 0) if mean_true > 0 else 0
    top_contam = max(int(stats.nbinom.isf(TAIL_MASS, alpha, success)), 0)
    top = top_true + top_contam + 2
    if top > NORMAL_SUPPORT:
        raise NumericalError(
            f"marginal support of {top} counts is too long to enumerate "
            f"(lambda={lam:g}, d={d:g}, alpha={alpha:g}, beta={beta:g})"
        )

    support = np.arange(top + 1)
    true_part = stats.poisson.pmf(support, mean_true) if mean_true > 0 else (support == 0) * 1.0
    contam_part = stats.nbinom.pmf(support, alpha, success)
    if top > DIRECT_CONVOLUTION:
        pmf = signal.fftconvolve(true_part, contam_part)[: top + 1]
    else:
        pmf = np.convolve(true_part, contam_part)[: top + 1]
    return np.clip(pmf, 0.0, None)


def fisher_information(lam: float, d: float, alpha: float, beta: float) -> float:
    """
    Fisher information about lambda^r in one observed count.

    Falls back to a Gaussian approximation of the marginal when its support
    exceeds NORMAL_SUPPORT counts.

    Raises:
        NumericalError: If the result is not finite and positive
    """
    mean_total = (lam + alpha / beta) * d
    if mean_total + 40.0 * math.sqrt(mean_total + 1.0) > NORMAL_SUPPORT:
        info = _normal_information(lam, d, alpha, beta)
    else:
        pmf = marginal_pmf(lam, d, alpha, beta)
        previous = np.concatenate(([0.0], pmf[:-1]))
        keep = pmf > TAIL_MASS * pmf.max()
        info = d * d * float(np.sum((previous[keep] - pmf[keep]) ** 2 / pmf[keep]))

    if not math.isfinite(info) or info <= 0:
        raise NumericalError(
            f"Fisher information evaluated to {info!r} "
            f"(lambda={lam:g}, d={d:g}, alpha={alpha:g}, beta={beta:g})"
        )
    return info


@lru_cache(maxsize=4096)
def _log_information_spline(alpha: float, beta: float, d: float, top_exponent: int) -> CubicSpline:
    grid = np.linspace(math.log(EPSILON), top_exponent * math.log(2.0), GRID_POINTS)
    values = [math.log(fisher_information(math.exp(g), d, alpha, beta)) for g in grid]
    return CubicSpline(grid, values)


class ReferencePrior:
    """
    Reference prior p(lambda) proportional to |I(lambda)|^(1/2) / |I(0)|^(1/2).

    log I is interpolated with a cubic spline over a log-lambda grid from
    EPSILON up to a power of two above ``upper``. I(0) may be unbounded and
    is replaced by I(EPSILON); lambda values outside the grid are clamped to
    its ends. Splines are cached per (alpha, beta, d, grid).

    Args:
        alpha: Contaminant gamma shape
        beta: Contaminant gamma rate
        d: Size factor of the specimen
        upper: Largest lambda the grid must cover
    """

    def __init__(self, alpha: float, beta: float, d: float, upper: float):
        for name, value in (("alpha", alpha), ("beta", beta), ("d", d), ("upper", upper)):
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be finite and > 0, got {value}")
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.d = float(d)
        exponent = max(math.ceil(math.log2(upper)), 1)
        self._spline = _log_information_spline(self.alpha, self.beta, self.d, exponent)
        self._bounds = (math.log(EPSILON), exponent * math.log(2.0))
        self._log_info_floor = float(self._spline(self._bounds[0]))

    @classmethod
    def for_count(cls, k: int, d: float, alpha: float, beta: float) -> "ReferencePrior":
        """Prior whose grid covers the posterior range for an observed count k."""
        upper = 2.0 * (k + 10.0 * math.sqrt(k) + 10.0) / d
        return cls(alpha, beta, d, upper)

    def log_information(self, lam: np.ndarray) -> np.ndarray:
        log_lam = np.clip(np.log(np.maximum(lam, EPSILON)), *self._bounds)
        return self._spline(log_lam)

    def log_density(self, lam: np.ndarray) -> np.ndarray:
        return 0.5 * (self.log_information(lam) - self._log_info_floor)
