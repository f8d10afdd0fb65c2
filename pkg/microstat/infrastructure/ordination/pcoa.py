"""
Principal coordinate analysis (classical multidimensional scaling).
"""

from typing import Callable, Dict, List, Optional, Union

import numpy as np
from scipy import linalg

from microstat.core.dataset import Dataset
from microstat.shared import TransformableMixin
from microstat.shared.errors import DataValidationError, flag
from .base import DistanceMatrix, Ordination, Ordinator, orient_columns
from .distances import DistanceMetric, distance
from .unifrac import unifrac

EIGEN_TOL = 1e-10
UNIFRAC_METRICS = ("unifrac", "weighted_unifrac", "unweighted_unifrac", "normalized_unifrac")


def pcoa(d: DistanceMatrix, k: int = 2) -> Ordination:
    """
    Classical scaling of a distance matrix.

    B = -1/2 J D^2 J is decomposed with a symmetric eigensolver; axes with
    non-positive eigenvalues are dropped and the absolute sum of the
    negative ones is reported. Coordinates are eigenvectors scaled by the
    square root of their eigenvalue, each oriented so that its
    largest-magnitude entry is positive.

    Args:
        d: Distance matrix over N >= 3 specimens
        k: Number of axes requested

    Returns:
        Ordination: Truncated to the positive axes (flagged) when k exceeds them
    """
    if not isinstance(d, DistanceMatrix):
        raise TypeError(f"Expected DistanceMatrix, got {type(d).__name__}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    n = d.n
    if n < 3:
        raise DataValidationError(f"PCoA needs at least 3 specimens, got {n}")

    centering = np.eye(n) - np.full((n, n), 1.0 / n)
    gram = -0.5 * centering @ (d.d**2) @ centering
    gram = (gram + gram.T) / 2.0

    values, vectors = linalg.eigh(gram)
    order = np.argsort(values)[::-1]
    values, vectors = values[order], vectors[:, order]

    tol = EIGEN_TOL * max(1.0, float(np.abs(values).max()))
    positive = values > tol
    negative_mass = float(-values[values < -tol].sum())
    n_positive = int(positive.sum())

    flags: list[str] = []
    if k > n_positive:
        flags.append("truncated_axes")
        flag(f"requested {k} axes but only {n_positive} eigenvalues are positive")
    axes = min(k, n_positive)

    vectors = orient_columns(vectors[:, :axes])
    coordinates = vectors * np.sqrt(values[:axes])
    total = values[positive].sum()
    explained = values[:axes] / total if total > 0 else np.zeros(axes)
    if negative_mass > 0:
        flags.append("negative_eigenvalues")

    return Ordination(
        ids=d.ids,
        coordinates=coordinates,
        eigenvalues=values[:axes],
        variance_explained=explained,
        method="pcoa",
        negative_eigenvalue_mass=negative_mass,
        flags=tuple(flags) + tuple(d.flags),
    )


class PCoAOrdinator(Ordinator, TransformableMixin):
    """
    PCoA of a distance computed from the dataset's counts.

    Args:
        metric: 'jaccard', 'bray_curtis' (or 'bray'), 'euclidean',
            'unifrac'/'weighted_unifrac', 'unweighted_unifrac' or
            'normalized_unifrac'
        axes: Number of axes
        table: Optional callable mapping the dataset to the table the
            distance is computed on (default: raw counts)
        transformers: Optional dict of transformer lists applied to the
            dataset 'before' ordination
    """

    def __init__(
        self,
        metric: Union[str, DistanceMetric] = DistanceMetric.BRAY_CURTIS,
        axes: int = 2,
        table: Optional[Callable] = None,
        transformers: Optional[Dict[str, List[Callable]]] = None,
    ):
        if isinstance(metric, str) and metric.lower() in UNIFRAC_METRICS:
            self.metric: Union[str, DistanceMetric] = metric.lower()
        else:
            self.metric = DistanceMetric.parse(metric)
        if not isinstance(axes, int) or axes < 1:
            raise ValueError(f"axes must be a positive integer, got {axes!r}")
        self.axes: int = axes
        self.table = table
        self.transformers: dict[str, list[Callable]] = transformers or {}

    def distances(self, dataset: Dataset) -> DistanceMatrix:
        dataset = self._apply_transformers(dataset, "before")
        if self.metric in UNIFRAC_METRICS:
            if dataset.tree is None:
                raise DataValidationError("UniFrac needs a tree; the dataset has none")
            return unifrac(
                dataset.counts,
                dataset.tree,
                weighted=self.metric != "unweighted_unifrac",
                normalized=self.metric == "normalized_unifrac",
            )
        table = self.table(dataset) if self.table is not None else dataset.counts
        return distance(table, self.metric)

    def ordinate(self, dataset: Dataset) -> Ordination:
        return pcoa(self.distances(dataset), self.axes)
