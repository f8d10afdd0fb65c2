"""
Label alignment of topics across chains.
"""

from dataclasses import replace

import numpy as np

from microstat.shared.errors import NumericalError
from .fit import TopicFit


def match_topics(reference: np.ndarray, candidate: np.ndarray) -> np.ndarray:
    """
    Greedy maximum-correlation matching of two T x m topic matrices.

    The unmatched (reference, candidate) pair with the highest Pearson
    correlation is matched first, then the next highest among the rest.
    Ties go to the lowest reference index, then the lowest candidate index.

    Returns:
        np.ndarray: perm with perm[r] the candidate topic matched to
            reference topic r

    Raises:
        NumericalError: If a topic's vector is constant
    """
    reference = np.asarray(reference, dtype=float)
    candidate = np.asarray(candidate, dtype=float)
    if reference.shape != candidate.shape or reference.ndim != 2:
        raise ValueError(f"topic matrices differ in shape: {reference.shape} vs {candidate.shape}")
    n_topics = reference.shape[0]
    if n_topics == 1:
        return np.zeros(1, dtype=np.int64)

    for label, matrix in (("reference", reference), ("candidate", candidate)):
        constant = np.flatnonzero(np.ptp(matrix, axis=1) == 0)
        if constant.size:
            raise NumericalError(
                f"{label} topic {constant[0] + 1} has a constant distribution; "
                "correlation is undefined"
            )

    work = np.corrcoef(reference, candidate)[:n_topics, n_topics:]
    perm = np.empty(n_topics, dtype=np.int64)
    for _ in range(n_topics):
        r, c = np.unravel_index(np.argmax(work), work.shape)
        perm[r] = c
        work[r, :] = -np.inf
        work[:, c] = -np.inf
    return perm


def align_chains(fit: TopicFit) -> TopicFit:
    """
    Relabel every chain's topics to match chain 1.

    Chain 1 is left untouched. Each other chain's mean beta is matched to
    chain 1's mean beta with :func:`match_topics` and the permutation is
    applied to that chain's theta and beta draws.

    Raises:
        ValueError: If the fit has fewer than two chains
        NumericalError: If a mean topic distribution is constant
    """
    if not isinstance(fit, TopicFit):
        raise TypeError(f"Expected TopicFit, got {type(fit).__name__}")
    if fit.n_chains < 2:
        raise ValueError(f"alignment needs at least 2 chains, got {fit.n_chains}")

    theta = fit.theta.copy()
    beta = fit.beta.copy()
    permutations = fit.permutations.copy()
    reference = fit.beta[0].mean(axis=0)
    for chain in range(1, fit.n_chains):
        perm = match_topics(reference, fit.beta[chain].mean(axis=0))
        theta[chain] = fit.theta[chain][:, :, perm]
        beta[chain] = fit.beta[chain][:, perm, :]
        permutations[chain] = fit.permutations[chain][perm]

    return replace(fit, theta=theta, beta=beta, permutations=permutations, aligned=True)
