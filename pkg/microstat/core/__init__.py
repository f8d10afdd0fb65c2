"""
Core data model.
"""

from .count_table import CountTable, library_sizes
from .samples import SampleMetadata, SpecimenType, samples_frame
from .taxonomy import RANKS, TaxonomyTable
from .tree import PhyloTree
from .dataset import Dataset
from .transformed import TransformedTable, TransformTag
from .validation import require_valid, validate

__all__ = [
    "CountTable",
    "library_sizes",
    "SampleMetadata",
    "SpecimenType",
    "samples_frame",
    "RANKS",
    "TaxonomyTable",
    "PhyloTree",
    "Dataset",
    "TransformedTable",
    "TransformTag",
    "require_valid",
    "validate",
]
