"""
One-factor PERMANOVA.
"""

from typing import Optional, Sequence

import numpy as np

from microstat.infrastructure.ordination.base import DistanceMatrix
from .base import (
    PermTestResult,
    PermutationScheme,
    PermutationTest,
    encode_blocks,
    encode_groups,
    permutation_p_value,
)


def _within_sum_of_squares(d2: np.ndarray, labels: np.ndarray, n_groups: int) -> np.ndarray:
    """SS_W for every row of a (rows x N) label array."""
    onehot = np.eye(n_groups)[labels]
    # sum_{j<k in g} d^2 = 1/2 g^T D2 g
    pair_sums = 0.5 * np.einsum("bna,nm,bma->ba", onehot, d2, onehot)
    sizes = onehot.sum(axis=1)
    return np.sum(pair_sums / sizes, axis=1)


def pseudo_f(d: DistanceMatrix, groups: Sequence) -> float:
    """
    PERMANOVA pseudo-F for one labelling.

    SS_T = (1/N) sum_{j<k} d_jk^2, SS_W = sum_g (1/n_g) sum_{j<k in g} d_jk^2,
    F = ((SS_T - SS_W) / (a - 1)) / (SS_W / (N - a)); infinite when SS_W = 0.
    """
    codes, levels = encode_groups(groups)
    return float(_pseudo_f_rows(d.d**2, codes[None, :], len(levels))[0])


def _pseudo_f_rows(d2: np.ndarray, labels: np.ndarray, n_groups: int) -> np.ndarray:
    n = d2.shape[0]
    total = d2[np.triu_indices(n, k=1)].sum() / n
    within = _within_sum_of_squares(d2, labels, n_groups)
    among = total - within
    with np.errstate(divide="ignore", invalid="ignore"):
        f = (among / (n_groups - 1)) / (within / (n - n_groups))
    f = np.where(within <= 1e-15 * max(total, 1e-300), np.inf, f)
    return np.where((within <= 0) & (among <= 0), 0.0, f)


def permanova(
    d: DistanceMatrix,
    groups: Sequence,
    n_perm: int = 999,
    seed: int = 0,
    blocks: Optional[Sequence] = None,
    threads: Optional[int] = None,
) -> PermTestResult:
    """
    Permutation test of the pseudo-F statistic.

    Labels are permuted freely, or only within blocks (e.g. subject or pair)
    when ``blocks`` is given.

    Args:
        d: Distance matrix
        groups: Group label per specimen (at least 2 groups of at least 2)
        n_perm: Number of permutations
        seed: Integer seed
        blocks: Optional block label per specimen
        threads: Worker cap (None uses the global setting)

    Raises:
        ValueError: If a group has a single specimen or the blocks leave
            nothing to permute
    """
    if not isinstance(d, DistanceMatrix):
        raise TypeError(f"Expected DistanceMatrix, got {type(d).__name__}")
    if len(groups) != d.n:
        raise ValueError(f"{len(groups)} group labels for {d.n} specimens")
    codes, levels = encode_groups(groups)
    block_sets = encode_blocks(blocks, codes)
    d2 = d.d**2

    observed, p_value = permutation_p_value(
        lambda labels: _pseudo_f_rows(d2, labels, len(levels)),
        codes,
        n_perm,
        seed,
        block_sets,
        threads,
    )
    scheme = PermutationScheme.FREE if block_sets is None else PermutationScheme.WITHIN_BLOCK
    return PermTestResult(
        statistic_observed=observed,
        p_value=p_value,
        n_perm=int(n_perm),
        permutation_scheme=scheme,
        seed=int(seed),
        method="permanova",
        statistic_name="pseudo_F",
        flags=tuple(d.flags),
    )


class PermanovaTest(PermutationTest):
    """
    PermutationTest wrapper around :func:`permanova`.

    Args:
        n_perm: Number of permutations (default 999)
        seed: Integer seed
        threads: Worker cap
    """

    def __init__(self, n_perm: int = 999, seed: int = 0, threads: Optional[int] = None):
        if not isinstance(n_perm, int) or n_perm < 1:
            raise ValueError(f"n_perm must be a positive integer, got {n_perm!r}")
        self.n_perm: int = n_perm
        self.seed: int = seed
        self.threads: Optional[int] = threads

    def test(
        self, d: DistanceMatrix, groups: Sequence, blocks: Optional[Sequence] = None
    ) -> PermTestResult:
        return permanova(d, groups, self.n_perm, self.seed, blocks, self.threads)
