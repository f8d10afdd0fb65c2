"""
Jaccard, Bray-Curtis and Euclidean distances between specimens.
"""

from enum import Enum
from typing import Union

import numpy as np
from scipy.spatial.distance import pdist, squareform

from microstat.core.count_table import CountTable
from microstat.core.transformed import TransformedTable
from microstat.shared.errors import DataValidationError, flag
from .base import DistanceMatrix

Table = Union[CountTable, TransformedTable]


class DistanceMetric(str, Enum):
    JACCARD = "jaccard"
    BRAY_CURTIS = "bray_curtis"
    EUCLIDEAN = "euclidean"

    @classmethod
    def parse(cls, value: Union[str, "DistanceMetric"]) -> "DistanceMetric":
        """Accept enum members, their values and the short alias 'bray'."""
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower().replace("-", "_")
        if text == "bray":
            return cls.BRAY_CURTIS
        try:
            return cls(text)
        except ValueError:
            raise ValueError(
                f"Invalid metric: '{value}'. Must be one of: {[m.value for m in cls]}"
            ) from None


def table_values(table: Table) -> tuple[np.ndarray, tuple[str, ...]]:
    """Specimen x taxon observation matrix and the specimen ids of a table."""
    if isinstance(table, CountTable):
        return table.counts.T.astype(float), table.specimen_ids
    if isinstance(table, TransformedTable):
        return np.asarray(table.values, dtype=float).T, table.specimen_ids
    raise TypeError(f"Expected CountTable or TransformedTable, got {type(table).__name__}")


def distance(table: Table, metric: Union[str, DistanceMetric]) -> DistanceMatrix:
    """
    Pairwise dissimilarities between the specimens (columns) of a table.

    bray_curtis(x, y) = sum|x - y| / sum(x + y), defined as 0 (flagged) when
    both specimens are empty. jaccard = 1 - |x and y| / |x or y| on binary
    data; non-binary input is binarised at 1 (any positive value counts as
    present), flagged.

    Raises:
        ValueError: If fewer than two specimens, an unknown metric, or
            negative values for Bray-Curtis
    """
    metric = DistanceMetric.parse(metric)
    X, ids = table_values(table)
    if X.shape[0] < 2:
        raise DataValidationError(f"distances need at least 2 specimens, got {X.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise DataValidationError("table values must be finite (unfitted anscombe rows are NaN)")

    flags: list[str] = []
    if metric is DistanceMetric.EUCLIDEAN:
        d = squareform(pdist(X, "euclidean"))
    elif metric is DistanceMetric.BRAY_CURTIS:
        if np.any(X < 0):
            raise ValueError("Bray-Curtis needs non-negative values")
        totals = X.sum(axis=1)
        numerator = squareform(pdist(X, "cityblock"))
        denominator = totals[:, None] + totals[None, :]
        empty_pair = denominator == 0
        np.fill_diagonal(empty_pair, False)
        d = np.divide(numerator, denominator, out=np.zeros_like(numerator), where=~empty_pair)
        np.fill_diagonal(d, 0.0)
        if empty_pair.any():
            flags.append("empty_pair")
            flag("Bray-Curtis is undefined between two empty specimens; set to 0")
    else:
        binary = np.isin(X, (0.0, 1.0)).all()
        if not binary:
            flags.append("binarized")
            flag("Jaccard distance on non-binary data; values > 0 treated as present")
        present = X > 0
        both = present.astype(float) @ present.T.astype(float)
        sizes = present.sum(axis=1)
        either = sizes[:, None] + sizes[None, :] - both
        d = np.where(either > 0, 1.0 - both / np.where(either > 0, either, 1.0), 0.0)
        np.fill_diagonal(d, 0.0)

    d = np.maximum((d + d.T) / 2.0, 0.0)
    return DistanceMatrix(ids, d, metric.value, tuple(flags))
