"""
Result types and base abstract class for ordination methods.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from microstat.core.dataset import Dataset


def _frozen(array, dtype=float) -> np.ndarray:
    array = np.array(array, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """
    Symmetric dissimilarities between specimens.

    Args:
        ids: Specimen identifiers
        d: N x N matrix, symmetric to 1e-12 with a zero diagonal
        metric: Name of the metric that produced it
        flags: Non-fatal conditions raised while computing it

    Raises:
        ValueError: If the matrix is not square, symmetric, non-negative or
            has a non-zero diagonal
    """

    ids: tuple[str, ...]
    d: np.ndarray
    metric: str
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        ids = tuple(str(i) for i in self.ids)
        d = np.array(self.d, dtype=float)
        if d.shape != (len(ids), len(ids)):
            raise ValueError(f"distance matrix shape {d.shape} does not match {len(ids)} ids")
        if not np.all(np.isfinite(d)):
            raise ValueError("distances must be finite")
        if np.max(np.abs(d - d.T), initial=0.0) > 1e-12:
            raise ValueError("distance matrix is not symmetric")
        if np.any(np.diag(d) != 0):
            raise ValueError("distance matrix diagonal must be zero")
        if np.any(d < 0):
            raise ValueError("distances must be non-negative")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "d", _frozen((d + d.T) / 2.0))
        object.__setattr__(self, "flags", tuple(self.flags))

    @property
    def n(self) -> int:
        return len(self.ids)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            self.d,
            index=pd.Index(self.ids, name="specimen_id"),
            columns=list(self.ids),
        )

    def condensed(self) -> np.ndarray:
        """Upper-triangle entries in row-major order."""
        return self.d[np.triu_indices(self.n, k=1)]


@dataclass(frozen=True, eq=False)
class Ordination:
    """
    Specimen coordinates on ordered axes.

    Args:
        ids: Specimen identifiers (rows of coordinates)
        coordinates: N x K specimen coordinates
        eigenvalues: Length-K, non-increasing
        variance_explained: Share of the total carried by each axis
        method: 'pcoa', 'pca' or 'ca'
        negative_eigenvalue_mass: Sum of |negative eigenvalues| (PCoA)
        loadings: Optional m x K taxon loadings (PCA) or taxon principal
            coordinates (CA)
        loading_ids: Taxon identifiers for the loadings
        total_inertia: Sum of squared singular values (CA)
        flags: Non-fatal conditions such as truncated axes
    """

    ids: tuple[str, ...]
    coordinates: np.ndarray
    eigenvalues: np.ndarray
    variance_explained: np.ndarray
    method: str
    negative_eigenvalue_mass: float = 0.0
    loadings: Optional[np.ndarray] = None
    loading_ids: Optional[tuple[str, ...]] = None
    total_inertia: Optional[float] = None
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        ids = tuple(str(i) for i in self.ids)
        coordinates = np.array(self.coordinates, dtype=float).reshape(len(ids), -1)
        eigenvalues = np.array(self.eigenvalues, dtype=float)
        explained = np.array(self.variance_explained, dtype=float)
        n_axes = coordinates.shape[1]
        if eigenvalues.shape != (n_axes,) or explained.shape != (n_axes,):
            raise ValueError(
                f"{n_axes} axes but {eigenvalues.size} eigenvalues and "
                f"{explained.size} variance shares"
            )
        scale = max(1.0, float(np.abs(eigenvalues).max(initial=0.0)))
        if np.any(np.diff(eigenvalues) > 1e-12 * scale):
            raise ValueError("eigenvalues must be non-increasing")
        if explained.sum() > 1.0 + 1e-9:
            raise ValueError(f"variance shares sum to {explained.sum():.6g} > 1")
        if self.negative_eigenvalue_mass < 0:
            raise ValueError("negative_eigenvalue_mass must be >= 0")

        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "coordinates", _frozen(coordinates))
        object.__setattr__(self, "eigenvalues", _frozen(eigenvalues))
        object.__setattr__(self, "variance_explained", _frozen(explained))
        object.__setattr__(self, "flags", tuple(self.flags))
        if self.loadings is not None:
            loadings = np.array(self.loadings, dtype=float).reshape(-1, n_axes)
            object.__setattr__(self, "loadings", _frozen(loadings))
            if self.loading_ids is not None:
                loading_ids = tuple(str(i) for i in self.loading_ids)
                if len(loading_ids) != loadings.shape[0]:
                    raise ValueError(
                        f"{len(loading_ids)} loading ids for {loadings.shape[0]} loading rows"
                    )
                object.__setattr__(self, "loading_ids", loading_ids)

    @property
    def n_axes(self) -> int:
        return self.coordinates.shape[1]

    def axis_names(self) -> list[str]:
        return [f"Axis{a + 1}" for a in range(self.n_axes)]

    def to_frame(self) -> pd.DataFrame:
        """Specimen coordinates with one column per axis."""
        frame = pd.DataFrame(self.coordinates, columns=self.axis_names())
        frame.insert(0, "specimen_id", list(self.ids))
        return frame

    def loadings_frame(self) -> pd.DataFrame:
        if self.loadings is None:
            raise ValueError(f"{self.method} ordination has no loadings")
        frame = pd.DataFrame(self.loadings, columns=self.axis_names())
        frame.insert(0, "taxon_id", list(self.loading_ids or range(len(self.loadings))))
        return frame

    def axes_frame(self) -> pd.DataFrame:
        """Eigenvalue and variance share per axis."""
        return pd.DataFrame(
            {
                "axis": self.axis_names(),
                "eigenvalue": self.eigenvalues,
                "variance_explained": self.variance_explained,
            }
        )


def orient_columns(vectors: np.ndarray) -> np.ndarray:
    """
    Flip column signs so each column's largest-magnitude entry is positive.

    Ties go to the first such entry.
    """
    vectors = np.array(vectors, dtype=float)
    if vectors.size == 0:
        return vectors
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


class Ordinator(ABC):
    """
    Abstract base class for all ordination implementations.

    All ordination implementations must inherit from this class
    and implement the ordinate() method.
    """

    @abstractmethod
    def ordinate(self, dataset: Dataset) -> Ordination:
        """
        Place the dataset's specimens on ordination axes.

        Args:
            dataset: Dataset to ordinate

        Returns:
            Ordination: Specimen coordinates and axis summaries
        """
        pass
