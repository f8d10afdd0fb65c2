"""
Anscombe variance-stabilising transform for negative binomial counts.
"""

from typing import Mapping, Optional, Sequence, Union

import numpy as np

from microstat.core.count_table import CountTable
from microstat.core.transformed import TransformedTable, TransformTag
from microstat.infrastructure.models.negative_binomial import NBParams
from microstat.shared.errors import DataValidationError, flag

ANSCOMBE_C = 3.0 / 8.0
MIN_DISPERSION = 1.0
CLAMPED_DISPERSION = 1.0 + 1e-6

NBLookup = Union[Mapping[str, Optional[NBParams]], Sequence[Optional[NBParams]]]


def _k(params: Optional[NBParams]) -> float:
    return np.nan if params is None else params.k


def _dispersions(counts: CountTable, nb: NBLookup) -> np.ndarray:
    if isinstance(nb, Mapping):
        missing = [t for t in counts.taxa_ids if t not in nb]
        if missing:
            raise DataValidationError(
                f"no negative binomial parameters for taxon/taxa: {', '.join(missing)}"
            )
        return np.array([_k(nb[t]) for t in counts.taxa_ids], dtype=float)

    params = list(nb)
    if len(params) != counts.n_taxa:
        raise DataValidationError(
            f"got negative binomial parameters for {len(params)} taxa, expected {counts.n_taxa}"
        )
    return np.array([_k(p) for p in params], dtype=float)


def anscombe(counts: CountTable, nb: NBLookup, c: float = ANSCOMBE_C) -> TransformedTable:
    """
    K* = asinh(sqrt((K + c) / (k_i - 2c))) with c = 3/8.

    The variance of K* is close to psi'(k_i) / 4, roughly constant in the
    mean. Taxa with k_i <= 1 are clamped to k = 1 + 1e-6 and listed in the
    result's flags. Taxa without parameters (None) get a NaN row.

    Args:
        counts: Count table
        nb: Per-taxon NB parameters, keyed by taxon id or aligned with rows
        c: Additive constant

    Returns:
        TransformedTable: Tag 'anscombe', params {'c', 'k'}

    Raises:
        DataValidationError: If a taxon is missing from the lookup
    """
    k = _dispersions(counts, nb)
    unfitted = np.isnan(k)
    low = k <= MIN_DISPERSION
    flags = [f"no_dispersion:{t}" for t, skip in zip(counts.taxa_ids, unfitted) if skip]
    if low.any():
        clamped = [t for t, is_low in zip(counts.taxa_ids, low) if is_low]
        flag(f"dispersion k <= 1 clamped to {CLAMPED_DISPERSION} for: {', '.join(clamped)}")
        flags += [f"clamped_dispersion:{t}" for t in clamped]
        k = np.where(low, CLAMPED_DISPERSION, k)

    values = np.arcsinh(np.sqrt((counts.counts + c) / (k[:, None] - 2.0 * c)))
    return TransformedTable.like(
        counts, values, TransformTag.ANSCOMBE, {"c": c, "k": k.tolist()}, flags
    )
