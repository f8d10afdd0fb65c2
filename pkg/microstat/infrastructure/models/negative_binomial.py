"""
Negative binomial maximum-likelihood fitting.

Parameterisation used throughout the package: K_j ~ NB(mean mu * d_j,
dispersion k) with variance m + m^2 / k where m = mu * d_j. Large k is the
Poisson limit.
"""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize, special, stats

from microstat.shared.errors import DataValidationError, flag

MAX_DISPERSION = 1e8
MIN_DISPERSION = 1e-8
GRADIENT_TOL = 1e-8
MAX_ITERATIONS = 100


@dataclass(frozen=True)
class NBParams:
    """Mean and dispersion of a negative binomial distribution."""

    mu: float
    k: float

    def __post_init__(self):
        for name in ("mu", "k"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be finite and > 0, got {value}")

    def success_probability(self, size_factors: np.ndarray) -> np.ndarray:
        """numpy/scipy ``p`` for each specimen: k / (k + mu d)."""
        return self.k / (self.k + self.mu * np.asarray(size_factors, dtype=float))

    def variance(self, size_factor: float = 1.0) -> float:
        m = self.mu * size_factor
        return m + m * m / self.k


@dataclass(frozen=True)
class NBFit:
    """
    Result of :func:`fit_nb`.

    Args:
        params: Estimated (mu, k)
        converged: Whether Newton iteration met the gradient tolerance
        iterations: Newton iterations used
        log_likelihood: Log-likelihood at params
        flags: 'poisson_limit' when k hit the upper cap, 'not_converged'
            when the method-of-moments fallback was returned
    """

    params: NBParams
    converged: bool
    iterations: int
    log_likelihood: float
    flags: tuple[str, ...] = ()

    @property
    def mu(self) -> float:
        return self.params.mu

    @property
    def k(self) -> float:
        return self.params.k


def nb_log_likelihood(counts: np.ndarray, means: np.ndarray, k: float) -> float:
    """Sum of NB log-pmfs for counts with per-observation means."""
    return float(stats.nbinom.logpmf(counts, k, k / (k + means)).sum())


def _score_mu(mu: float, counts: np.ndarray, d: np.ndarray, k: float) -> float:
    return float(np.sum(counts / mu - (counts + k) * d / (k + mu * d)))


def _profile_mu(counts: np.ndarray, d: np.ndarray, k: float) -> float:
    """Root of the mu score for fixed k (exactly sum(K)/sum(d) when d is constant)."""
    if np.all(d == d[0]):
        return float(counts.sum() / d.sum())
    centre = float(counts.sum() / d.sum())
    lo, hi = centre / 2.0, centre * 2.0
    while _score_mu(lo, counts, d, k) <= 0:
        lo /= 10.0
    while _score_mu(hi, counts, d, k) >= 0:
        hi *= 10.0
    root = optimize.brentq(_score_mu, lo, hi, args=(counts, d, k), xtol=1e-300, rtol=1e-15)
    return float(root)


def _derivatives(counts: np.ndarray, d: np.ndarray, mu: float, k: float) -> tuple[float, float]:
    """Profile gradient and Hessian of the log-likelihood with respect to log k."""
    m = mu * d
    km = k + m
    l_k = np.sum(
        special.digamma(counts + k) - special.digamma(k) + np.log(k) + 1.0
        - np.log(km) - (counts + k) / km
    )
    l_kk = np.sum(
        special.polygamma(1, counts + k) - special.polygamma(1, k) + 1.0 / k
        - 1.0 / km - (m - counts) / km**2
    )
    l_mumu = np.sum(-counts / mu**2 + (counts + k) * d**2 / km**2)
    l_kmu = np.sum(d * (counts - m) / km**2)

    profile_kk = l_kk - l_kmu**2 / l_mumu
    gradient = k * l_k
    hessian = k * k * profile_kk + k * l_k
    return float(gradient), float(hessian)


def dispersion_mle(counts: np.ndarray, means: np.ndarray, start: float) -> tuple[float, bool]:
    """
    Maximise the NB log-likelihood over k with the means held fixed.

    Newton's method on log k with step halving, bounded to
    [MIN_DISPERSION, MAX_DISPERSION].

    Returns:
        tuple: (k, converged)
    """
    y = np.asarray(counts, dtype=float)
    m = np.asarray(means, dtype=float)
    n = y.size
    log_k = math.log(min(max(start, MIN_DISPERSION), MAX_DISPERSION))
    lo, hi = math.log(MIN_DISPERSION), math.log(MAX_DISPERSION)
    current = nb_log_likelihood(y, m, math.exp(log_k))

    for _ in range(MAX_ITERATIONS):
        k = math.exp(log_k)
        km = k + m
        l_k = np.sum(
            special.digamma(y + k) - special.digamma(k) + np.log(k) + 1.0
            - np.log(km) - (y + k) / km
        )
        l_kk = np.sum(
            special.polygamma(1, y + k) - special.polygamma(1, k) + 1.0 / k
            - 1.0 / km - (m - y) / km**2
        )
        gradient = k * l_k
        hessian = k * k * l_kk + gradient
        if (log_k >= hi and gradient >= 0) or (log_k <= lo and gradient <= 0):
            return k, True
        if abs(gradient) / n < GRADIENT_TOL:
            return k, True

        step = -gradient / hessian if hessian < 0 else math.copysign(1.0, gradient)
        step = max(-2.0, min(2.0, step))
        for _ in range(30):
            candidate = min(max(log_k + step, lo), hi)
            candidate_ll = nb_log_likelihood(y, m, math.exp(candidate))
            if candidate_ll >= current - 1e-12 * abs(current):
                break
            step /= 2.0
        else:
            return k, False
        log_k, current = candidate, candidate_ll

    return math.exp(log_k), False


def method_of_moments(counts: np.ndarray, size_factors: np.ndarray) -> NBParams:
    """Moment estimates of (mu, k) allowing for size factors."""
    counts = np.asarray(counts, dtype=float)
    d = np.asarray(size_factors, dtype=float)
    mu = counts.sum() / d.sum()
    excess = np.sum((counts - mu * d) ** 2) - mu * d.sum()
    k = MAX_DISPERSION if excess <= 0 else mu**2 * np.sum(d**2) / excess
    return NBParams(mu, float(np.clip(k, MIN_DISPERSION, MAX_DISPERSION)))


def fit_nb(counts: Sequence[int], size_factors: Sequence[float]) -> NBFit:
    """
    Maximum-likelihood (mu, k) for K_j ~ NB(mu * d_j, k).

    mu is profiled out (solved from its score for each k) and Newton's
    method runs on log k, starting from the method-of-moments estimate. The
    fit converges when the profile gradient per observation drops below
    1e-8. k is capped at 1e8 (flagged 'poisson_limit'); after 100
    iterations without convergence the moment estimates are returned,
    flagged 'not_converged'.

    Args:
        counts: Observed counts (length >= 3)
        size_factors: Positive size factor per observation

    Returns:
        NBFit: Estimates and convergence information

    Raises:
        ValueError: If fewer than 3 observations or lengths differ
        DataValidationError: If every count is zero or counts are negative
    """
    y = np.asarray(counts, dtype=float)
    d = np.asarray(size_factors, dtype=float)
    if y.ndim != 1 or y.size < 3:
        raise DataValidationError(f"fit_nb needs at least 3 observations, got {y.size}")
    if d.shape != y.shape:
        raise ValueError(f"size_factors length {d.size} does not match counts length {y.size}")
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise ValueError("size factors must be finite and > 0")
    if np.any(y < 0):
        raise DataValidationError("counts must be non-negative")
    if not np.any(y > 0):
        raise DataValidationError("cannot fit a negative binomial to all-zero counts")

    n = y.size
    start = method_of_moments(y, d)
    log_k = math.log(start.k)
    log_k_max = math.log(MAX_DISPERSION)
    log_k_min = math.log(MIN_DISPERSION)

    def profile_ll(lk: float) -> tuple[float, float]:
        k = math.exp(lk)
        mu = _profile_mu(y, d, k)
        return nb_log_likelihood(y, mu * d, k), mu

    current_ll, mu = profile_ll(log_k)
    for iteration in range(1, MAX_ITERATIONS + 1):
        k = math.exp(log_k)
        gradient, hessian = _derivatives(y, d, mu, k)

        if log_k >= log_k_max and gradient >= 0:
            flag(f"dispersion reached the Poisson limit k={MAX_DISPERSION:g}")
            params = NBParams(mu, MAX_DISPERSION)
            return NBFit(params, True, iteration, current_ll, ("poisson_limit",))
        if abs(gradient) / n < GRADIENT_TOL:
            return NBFit(NBParams(mu, k), True, iteration, current_ll)

        if hessian < 0:
            step = -gradient / hessian
        else:
            step = math.copysign(1.0, gradient)
        step = max(-2.0, min(2.0, step))

        # Backtrack until the profile likelihood does not decrease
        for _ in range(30):
            candidate = min(max(log_k + step, log_k_min), log_k_max)
            candidate_ll, candidate_mu = profile_ll(candidate)
            if candidate_ll >= current_ll - 1e-12 * abs(current_ll):
                break
            step /= 2.0
        else:
            break

        log_k, current_ll, mu = candidate, candidate_ll, candidate_mu

    fallback = start
    flag(f"negative binomial fit did not converge in {MAX_ITERATIONS} iterations; using moments")
    return NBFit(
        fallback,
        False,
        MAX_ITERATIONS,
        nb_log_likelihood(y, fallback.mu * d, fallback.k),
        ("not_converged",),
    )
