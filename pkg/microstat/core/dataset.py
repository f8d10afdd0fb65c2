"""
Dataset: counts, sample metadata, taxonomy and phylogeny bound together.
"""

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from microstat.shared.errors import DataValidationError
from .count_table import CountTable
from .samples import SampleMetadata
from .taxonomy import TaxonomyTable
from .tree import PhyloTree


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Immutable bundle of everything known about a set of specimens.

    Construction only checks types and that ``samples`` and ``size_factors``
    have the right length; identifier consistency across components is
    checked by :func:`microstat.core.validation.validate`, which reports
    violations as data.

    Args:
        counts: Taxa x specimen count table (biological specimens and
            negative controls together)
        samples: One SampleMetadata per specimen
        taxonomy: Optional taxonomy assignments
        tree: Optional phylogeny whose leaves are taxon ids
        size_factors: Optional positive scaling factor per specimen
    """

    counts: CountTable
    samples: tuple[SampleMetadata, ...]
    taxonomy: Optional[TaxonomyTable] = None
    tree: Optional[PhyloTree] = None
    size_factors: Optional[np.ndarray] = None

    def __post_init__(self):
        if not isinstance(self.counts, CountTable):
            raise TypeError(f"counts must be a CountTable, got {type(self.counts).__name__}")
        samples = tuple(self.samples)
        for sample in samples:
            if not isinstance(sample, SampleMetadata):
                raise TypeError(
                    f"samples must be SampleMetadata, got {type(sample).__name__}"
                )
        object.__setattr__(self, "samples", samples)

        if self.taxonomy is not None and not isinstance(self.taxonomy, TaxonomyTable):
            raise TypeError(
                f"taxonomy must be a TaxonomyTable, got {type(self.taxonomy).__name__}"
            )
        if self.tree is not None and not isinstance(self.tree, PhyloTree):
            raise TypeError(f"tree must be a PhyloTree, got {type(self.tree).__name__}")

        if self.size_factors is not None:
            factors = np.array(self.size_factors, dtype=float)
            if factors.shape != (self.counts.n_specimens,):
                raise DataValidationError(
                    f"size_factors has length {factors.size}, "
                    f"expected {self.counts.n_specimens}"
                )
            factors.setflags(write=False)
            object.__setattr__(self, "size_factors", factors)

    # -------------------------------------------------------------- accessors

    @property
    def specimen_ids(self) -> tuple[str, ...]:
        return self.counts.specimen_ids

    @property
    def taxa_ids(self) -> tuple[str, ...]:
        return self.counts.taxa_ids

    def sample_lookup(self) -> dict[str, SampleMetadata]:
        return {s.specimen_id: s for s in self.samples}

    def samples_in_order(self) -> list[SampleMetadata]:
        """
        Sample metadata aligned with the count table columns.

        Raises:
            DataValidationError: If a count column has no metadata row
        """
        lookup = self.sample_lookup()
        missing = [s for s in self.specimen_ids if s not in lookup]
        if missing:
            raise DataValidationError(
                f"no sample metadata for specimen(s): {', '.join(missing)}"
            )
        return [lookup[s] for s in self.specimen_ids]

    def control_mask(self) -> np.ndarray:
        """Boolean mask over count columns marking negative controls."""
        return np.array([s.is_control for s in self.samples_in_order()], dtype=bool)

    def biological(self) -> "Dataset":
        """Sub-dataset with the negative controls removed."""
        return self.subset_specimens(~self.control_mask())

    def controls(self) -> "Dataset":
        """Sub-dataset holding only the negative controls."""
        return self.subset_specimens(self.control_mask())

    def metadata_column(self, column: str) -> list[Optional[str]]:
        """
        Values of a metadata column in count-column order.

        Raises:
            KeyError: If no specimen carries the column
        """
        ordered = self.samples_in_order()
        values = [s.get(column) for s in ordered]
        core = {"specimen_id", "specimen_type", "subject_id", "batch", "group", "pair_id"}
        if column not in core and all(v is None for v in values):
            raise KeyError(f"metadata column '{column}' not found")
        return values

    # ------------------------------------------------------------ derivations

    def subset_specimens(self, mask: np.ndarray) -> "Dataset":
        """Keep the specimens selected by a boolean column mask."""
        mask = np.asarray(mask, dtype=bool)
        counts = self.counts.mask(np.ones(self.counts.n_taxa, dtype=bool), mask)
        keep = set(counts.specimen_ids)
        factors = None if self.size_factors is None else self.size_factors[mask]
        return replace(
            self,
            counts=counts,
            samples=tuple(s for s in self.samples if s.specimen_id in keep),
            size_factors=factors,
        )

    def subset_taxa(self, mask: np.ndarray) -> "Dataset":
        """Keep the taxa selected by a boolean row mask, pruning the tree."""
        mask = np.asarray(mask, dtype=bool)
        counts = self.counts.mask(mask, np.ones(self.counts.n_specimens, dtype=bool))
        taxonomy = None if self.taxonomy is None else self.taxonomy.subset(counts.taxa_ids)
        tree = self.tree
        if tree is not None:
            survivors = set(counts.taxa_ids) & set(tree.leaf_labels())
            tree = tree.prune(survivors) if survivors else None
        return replace(self, counts=counts, taxonomy=taxonomy, tree=tree)

    def with_counts(self, counts: CountTable) -> "Dataset":
        """Swap in a count table with the same identifiers."""
        if (
            counts.taxa_ids != self.counts.taxa_ids
            or counts.specimen_ids != self.counts.specimen_ids
        ):
            raise DataValidationError("replacement counts must keep the same identifiers")
        return replace(self, counts=counts)

    def with_size_factors(self, size_factors: Optional[Sequence[float]]) -> "Dataset":
        return replace(
            self, size_factors=None if size_factors is None else np.asarray(size_factors)
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        if (self.size_factors is None) != (other.size_factors is None):
            return False
        return (
            self.counts == other.counts
            and self.samples == other.samples
            and self.taxonomy == other.taxonomy
            and self.tree == other.tree
            and (
                self.size_factors is None
                or np.array_equal(self.size_factors, other.size_factors)
            )
        )

    def __repr__(self) -> str:
        return (
            f"Dataset(m={self.counts.n_taxa}, N={self.counts.n_specimens}, "
            f"taxonomy={self.taxonomy is not None}, tree={self.tree is not None}, "
            f"size_factors={self.size_factors is not None})"
        )
