"""
Correspondence analysis of a count table.
"""

from typing import Callable, Dict, List, Optional

import numpy as np
from scipy import linalg

from microstat.core.count_table import CountTable
from microstat.core.dataset import Dataset
from microstat.shared import TransformableMixin
from microstat.shared.errors import DataValidationError, flag
from .base import Ordination, Ordinator, orient_columns

INERTIA_TOL = 1e-12


def correspondence_analysis(counts: CountTable, k: int = 2) -> Ordination:
    """
    Correspondence analysis via the SVD of standardised residuals.

    With P = K / n++, row masses r and column masses c,
    S = D_r^(-1/2) (P - r c^T) D_c^(-1/2) = U Sigma V^T. Specimens (columns)
    get principal coordinates D_c^(-1/2) V Sigma and taxa (rows)
    D_r^(-1/2) U Sigma, returned as the loadings. Total inertia is the sum
    of squared singular values, i.e. Pearson's chi-square over n++.

    Args:
        counts: Table without all-zero rows or columns
        k: Number of axes requested

    Returns:
        Ordination: At most min(m, N) - 1 axes with non-zero inertia;
            fewer (flagged) when k exceeds them

    Raises:
        DataValidationError: If a row or column is all zero
    """
    if not isinstance(counts, CountTable):
        raise TypeError(f"Expected CountTable, got {type(counts).__name__}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    K = counts.counts.astype(float)
    total = K.sum()
    if total <= 0:
        raise DataValidationError("correspondence analysis needs a positive grand total")
    empty_rows = [t for t, s in zip(counts.taxa_ids, K.sum(axis=1)) if s == 0]
    empty_cols = [s for s, v in zip(counts.specimen_ids, K.sum(axis=0)) if v == 0]
    if empty_rows or empty_cols:
        raise DataValidationError(
            "correspondence analysis needs non-empty rows and columns; filter first "
            f"(empty taxa: {empty_rows}, empty specimens: {empty_cols})"
        )

    P = K / total
    r = P.sum(axis=1)
    c = P.sum(axis=0)
    S = (P - np.outer(r, c)) / np.sqrt(r)[:, None] / np.sqrt(c)[None, :]
    U, sigma, Vt = linalg.svd(S, full_matrices=False)
    inertia = float(np.sum(sigma**2))

    nontrivial = min(K.shape) - 1
    informative = int(np.sum(sigma[:nontrivial] ** 2 > INERTIA_TOL * max(inertia, 1.0)))
    flags: list[str] = []
    if k > informative:
        flags.append("truncated_axes")
        flag(f"requested {k} axes but the table supports {informative}")
    axes = min(k, informative)

    V = orient_columns(Vt[:axes].T)
    signs = np.sign(np.sum(V * Vt[:axes].T, axis=0))
    signs[signs == 0] = 1.0
    U = U[:, :axes] * signs
    column_coordinates = V / np.sqrt(c)[:, None] * sigma[:axes]
    row_coordinates = U / np.sqrt(r)[:, None] * sigma[:axes]

    eigenvalues = sigma[:axes] ** 2
    explained = eigenvalues / inertia if inertia > 0 else np.zeros(axes)
    return Ordination(
        ids=counts.specimen_ids,
        coordinates=column_coordinates,
        eigenvalues=eigenvalues,
        variance_explained=explained,
        method="ca",
        loadings=row_coordinates,
        loading_ids=counts.taxa_ids,
        total_inertia=inertia,
        flags=tuple(flags),
    )


class CAOrdinator(Ordinator, TransformableMixin):
    """
    Correspondence analysis of the dataset's counts.

    Args:
        axes: Number of axes
        transformers: Optional dict of transformer lists applied 'before'
            (e.g. a SpecFilter that drops empty rows)
    """

    def __init__(
        self,
        axes: int = 2,
        transformers: Optional[Dict[str, List[Callable]]] = None,
    ):
        if not isinstance(axes, int) or axes < 1:
            raise ValueError(f"axes must be a positive integer, got {axes!r}")
        self.axes: int = axes
        self.transformers: dict[str, list[Callable]] = transformers or {}

    def ordinate(self, dataset: Dataset) -> Ordination:
        dataset = self._apply_transformers(dataset, "before")
        return correspondence_analysis(dataset.counts, self.axes)
