"""
Minimum spanning tree pure-edge test.
"""

from typing import Optional, Sequence

import numpy as np

from microstat.shared.errors import DataValidationError, flag
from microstat.infrastructure.ordination.base import DistanceMatrix
from .base import (
    PermTestResult,
    PermutationScheme,
    PermutationTest,
    encode_blocks,
    encode_groups,
    permutation_p_value,
)


def minimum_spanning_tree(d: DistanceMatrix) -> tuple[np.ndarray, bool]:
    """
    Kruskal's algorithm over the complete graph.

    Edges are taken in (distance, j, k) order, so ties resolve
    lexicographically. The tree is ambiguous when a run of equal distances
    offers more component-joining edges than it ends up using.

    Returns:
        tuple: ((N - 1) x 2 array of (j, k) with j < k in insertion order,
            whether ties made the tree ambiguous)
    """
    n = d.n
    j, k = np.triu_indices(n, k=1)
    weights = d.d[j, k]
    order = np.lexsort((k, j, weights))
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges: list[tuple[int, int]] = []
    ambiguous = False
    position = 0
    while position < order.size and len(edges) < n - 1:
        weight = weights[order[position]]
        end = position
        while end < order.size and weights[order[end]] == weight:
            end += 1
        run = order[position:end]
        candidates = sum(find(j[e]) != find(k[e]) for e in run)
        added = 0
        for e in run:
            a, b = find(j[e]), find(k[e])
            if a != b:
                parent[max(a, b)] = min(a, b)
                edges.append((int(j[e]), int(k[e])))
                added += 1
        if candidates > added:
            ambiguous = True
        position = end

    return np.array(edges, dtype=np.int64).reshape(-1, 2), ambiguous


def mst_pure_edge_test(
    d: DistanceMatrix,
    groups: Sequence,
    n_perm: int = 999,
    seed: int = 0,
    blocks: Optional[Sequence] = None,
    threads: Optional[int] = None,
) -> PermTestResult:
    """
    Count MST edges joining same-group specimens and compare with permutations.

    The tree is built once from the distances; only the labels are permuted.
    Many pure edges mean the groups occupy distinct regions.

    Args:
        d: Distance matrix
        groups: Group label per specimen
        n_perm: Number of permutations
        seed: Integer seed
        blocks: Optional block label per specimen
        threads: Worker cap

    Returns:
        PermTestResult: flags include 'mst_ties' when equal distances made
            the tree ambiguous

    Raises:
        DataValidationError: If the labels do not form exactly two groups
    """
    if not isinstance(d, DistanceMatrix):
        raise TypeError(f"Expected DistanceMatrix, got {type(d).__name__}")
    if len(groups) != d.n:
        raise ValueError(f"{len(groups)} group labels for {d.n} specimens")
    codes, levels = encode_groups(groups, min_size=1)
    if len(levels) != 2:
        raise DataValidationError(
            f"the pure-edge test compares two groups, got {len(levels)}: {levels}"
        )
    block_sets = encode_blocks(blocks, codes)
    edges, ambiguous = minimum_spanning_tree(d)

    flags = list(d.flags)
    if ambiguous:
        flags.append("mst_ties")
        flag("tied distances made the minimum spanning tree ambiguous; ties broken by index")

    observed, p_value = permutation_p_value(
        lambda labels: np.sum(labels[:, edges[:, 0]] == labels[:, edges[:, 1]], axis=1),
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
        method="mst",
        statistic_name="pure_edges",
        flags=tuple(flags),
    )


class MstTest(PermutationTest):
    """
    PermutationTest wrapper around :func:`mst_pure_edge_test`.
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
        return mst_pure_edge_test(d, groups, self.n_perm, self.seed, blocks, self.threads)
