"""
Distances between specimens and the ordinations built on them.
"""

from .base import DistanceMatrix, Ordination, Ordinator, orient_columns
from .distances import DistanceMetric, distance, table_values
from .unifrac import branch_abundances, unifrac
from .pcoa import PCoAOrdinator, pcoa
from .pca import PCAOrdinator, pca
from .correspondence import CAOrdinator, correspondence_analysis

__all__ = [
    "DistanceMatrix",
    "Ordination",
    "Ordinator",
    "orient_columns",
    "DistanceMetric",
    "distance",
    "table_values",
    "branch_abundances",
    "unifrac",
    "PCoAOrdinator",
    "pcoa",
    "PCAOrdinator",
    "pca",
    "CAOrdinator",
    "correspondence_analysis",
]
