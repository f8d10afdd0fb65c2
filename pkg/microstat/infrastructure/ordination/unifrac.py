"""
Weighted and unweighted UniFrac distances.

For every branch b (the root branch excluded) with length l_b, p_A(b) is the
share of specimen A's reads descending from b.

    weighted:    sum_b l_b |p_A(b) - p_B(b)|
    normalized:  weighted / sum_b l_b (p_A(b) + p_B(b))
    unweighted:  sum_b l_b [b in exactly one support] / sum_b l_b [b in either]
"""

import numpy as np
from scipy.spatial.distance import pdist, squareform

from microstat.core.count_table import CountTable, library_sizes
from microstat.core.tree import PhyloTree
from microstat.shared.errors import DataValidationError, flag
from .base import DistanceMatrix


def branch_abundances(counts: CountTable, tree: PhyloTree) -> tuple[np.ndarray, np.ndarray]:
    """
    Read share below every branch for every specimen.

    Returns:
        tuple: (nodes x N proportions with the root row removed, matching
            branch lengths)

    Raises:
        DataValidationError: If a taxon with reads is not a leaf of the tree
    """
    index = tree.leaf_index()
    observed = counts.counts.sum(axis=1) > 0
    missing = [t for t, seen in zip(counts.taxa_ids, observed) if seen and t not in index]
    if missing:
        raise DataValidationError(
            f"taxa not found in the tree: {', '.join(missing)}; "
            "prune them at ingest or supply a complete tree"
        )

    proportions = counts.counts / library_sizes(counts)[None, :]
    below = np.zeros((tree.n_nodes, counts.n_specimens))
    for row, taxon in enumerate(counts.taxa_ids):
        if observed[row]:
            below[index[taxon]] += proportions[row]
    for node in tree.postorder():
        parent = tree.parents[node]
        if parent >= 0:
            below[parent] += below[node]

    keep = np.ones(tree.n_nodes, dtype=bool)
    keep[tree.root] = False
    return below[keep], np.asarray(tree.branch_lengths)[keep]


def unifrac(
    counts: CountTable,
    tree: PhyloTree,
    weighted: bool = True,
    normalized: bool = False,
) -> DistanceMatrix:
    """
    UniFrac distances between the specimens of a count table.

    The weighted form defaults to the unnormalised sum, the earth mover's
    distance of the two read distributions along the tree; ``normalized``
    rescales it to [0, 1]. Pairs with no branch length in either support get
    distance 0 (flagged).

    Args:
        counts: Count table (every taxon with reads must be a leaf)
        tree: Phylogeny whose leaf labels are taxon ids
        weighted: Weighted (abundance) or unweighted (presence) form
        normalized: Divide the weighted form by sum_b l_b (p_A + p_B)

    Raises:
        DataValidationError: If a taxon is missing from the tree or a
            specimen has no reads
        ValueError: If normalized is requested for the unweighted form
    """
    if not isinstance(tree, PhyloTree):
        raise TypeError(f"tree must be a PhyloTree, got {type(tree).__name__}")
    if normalized and not weighted:
        raise ValueError("normalized applies to weighted UniFrac only")
    if counts.n_specimens < 2:
        raise DataValidationError(
            f"distances need at least 2 specimens, got {counts.n_specimens}"
        )

    below, lengths = branch_abundances(counts, tree)
    flags: list[str] = []

    if weighted:
        scaled = (below * lengths[:, None]).T
        d = squareform(pdist(scaled, "cityblock"))
        metric = "weighted_unifrac"
        if normalized:
            mass = scaled.sum(axis=1)
            denominator = mass[:, None] + mass[None, :]
            degenerate = denominator == 0
            d = np.divide(d, denominator, out=np.zeros_like(d), where=~degenerate)
            metric = "weighted_normalized_unifrac"
            if degenerate[~np.eye(len(mass), dtype=bool)].any():
                flags.append("zero_branch_mass")
    else:
        present = (below > 0).astype(float)
        weighted_present = present * lengths[:, None]
        shared = weighted_present.T @ present
        totals = weighted_present.sum(axis=0)
        either = totals[:, None] + totals[None, :] - shared
        degenerate = either <= 0
        d = np.divide(either - shared, either, out=np.zeros_like(either), where=~degenerate)
        metric = "unweighted_unifrac"
        if degenerate[~np.eye(len(totals), dtype=bool)].any():
            flags.append("zero_branch_mass")

    if "zero_branch_mass" in flags:
        flag("UniFrac is undefined for pairs without branch length; set to 0")
    np.fill_diagonal(d, 0.0)
    d = np.maximum((d + d.T) / 2.0, 0.0)
    return DistanceMatrix(counts.specimen_ids, d, metric, tuple(flags))
