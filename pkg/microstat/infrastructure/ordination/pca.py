"""
Principal component analysis with taxon loadings for biplots.
"""

from typing import Callable, Dict, List, Optional, Union

import numpy as np
from scipy import linalg

from microstat.core.count_table import CountTable
from microstat.core.dataset import Dataset
from microstat.core.transformed import TransformedTable
from microstat.shared import TransformableMixin
from microstat.shared.errors import DataValidationError, NumericalError, flag
from .base import Ordination, Ordinator, orient_columns
from .distances import table_values

RANK_TOL = 1e-10


def pca(table: Union[TransformedTable, CountTable], k: int = 2) -> Ordination:
    """
    PCA with specimens as observations and taxa as variables.

    Every taxon is centred across specimens and the centred matrix is
    decomposed by SVD. Scores are U S and loadings V, so scores times
    loadings transposed reproduces the centred data at full rank. Each
    loading vector is oriented so its largest-magnitude entry is positive.

    Args:
        table: Transformed (or raw) table with N >= 2 specimens and m >= 2 taxa
        k: Number of axes requested

    Returns:
        Ordination: eigenvalues are S^2 / (N - 1); truncated (flagged) to
            the numerical rank when k exceeds it

    Raises:
        DataValidationError: If the table is too small or holds non-finite values
        NumericalError: If the centred matrix is zero
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    X, ids = table_values(table)
    n, m = X.shape
    if n < 2 or m < 2:
        raise DataValidationError(f"PCA needs at least 2 specimens and 2 taxa, got {n} x {m}")
    if not np.all(np.isfinite(X)):
        raise DataValidationError("PCA input must be finite (unfitted anscombe rows are NaN)")

    centred = X - X.mean(axis=0)
    if not np.any(np.abs(centred) > 0):
        raise NumericalError("PCA input has zero variance in every taxon")

    U, S, Vt = linalg.svd(centred, full_matrices=False)
    rank = int(np.sum(S > RANK_TOL * S[0]))
    flags: list[str] = []
    if k > rank:
        flags.append("truncated_axes")
        flag(f"requested {k} axes but the centred data has rank {rank}")
    axes = min(k, rank)

    loadings = orient_columns(Vt[:axes].T)
    scores = centred @ loadings
    squared = S**2
    return Ordination(
        ids=ids,
        coordinates=scores,
        eigenvalues=squared[:axes] / (n - 1),
        variance_explained=squared[:axes] / squared.sum(),
        method="pca",
        loadings=loadings,
        loading_ids=table.taxa_ids,
        flags=tuple(flags),
    )


class PCAOrdinator(Ordinator, TransformableMixin):
    """
    PCA of a table derived from the dataset.

    Args:
        axes: Number of axes
        table: Callable mapping the dataset to the table to decompose
            (default: raw counts)
        transformers: Optional dict of transformer lists applied 'before'
    """

    def __init__(
        self,
        axes: int = 2,
        table: Optional[Callable] = None,
        transformers: Optional[Dict[str, List[Callable]]] = None,
    ):
        if not isinstance(axes, int) or axes < 1:
            raise ValueError(f"axes must be a positive integer, got {axes!r}")
        self.axes: int = axes
        self.table = table
        self.transformers: dict[str, list[Callable]] = transformers or {}

    def ordinate(self, dataset: Dataset) -> Ordination:
        dataset = self._apply_transformers(dataset, "before")
        table = self.table(dataset) if self.table is not None else dataset.counts
        return pca(table, self.axes)
