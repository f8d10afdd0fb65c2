"""
Taxa x specimen count matrix.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from microstat.shared.errors import DataValidationError


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class CountTable:
    """
    Integer count matrix K with taxa as rows and specimens as columns.

    Row and column order is the order of ingestion and is the canonical order
    for every derived output.

    Args:
        taxa_ids: Unique taxon identifiers (length m)
        specimen_ids: Unique specimen identifiers (length N)
        counts: m x N array of non-negative integers

    Raises:
        DataValidationError: If shapes disagree, identifiers repeat or counts
            are negative or non-integer
    """

    taxa_ids: tuple[str, ...]
    specimen_ids: tuple[str, ...]
    counts: np.ndarray

    def __init__(
        self,
        taxa_ids: Sequence[str],
        specimen_ids: Sequence[str],
        counts: np.ndarray,
    ):
        taxa = tuple(str(t) for t in taxa_ids)
        specimens = tuple(str(s) for s in specimen_ids)
        values = np.asarray(counts)

        if values.ndim != 2:
            raise DataValidationError(
                f"counts must be a 2-D matrix, got {values.ndim} dimension(s)"
            )
        if values.shape != (len(taxa), len(specimens)):
            raise DataValidationError(
                f"counts shape {values.shape} does not match "
                f"{len(taxa)} taxa x {len(specimens)} specimens"
            )
        if len(taxa) < 1 or len(specimens) < 1:
            raise DataValidationError("CountTable needs at least one taxon and one specimen")

        if values.dtype.kind == "f":
            if not np.all(np.isfinite(values)) or np.any(values != np.round(values)):
                raise DataValidationError("counts must be integers")
        elif values.dtype.kind not in "iub":
            raise DataValidationError(f"counts must be integers, got dtype {values.dtype}")

        values = values.astype(np.int64)
        if np.any(values < 0):
            i, j = np.argwhere(values < 0)[0]
            raise DataValidationError(
                f"negative count {values[i, j]} for taxon '{taxa[i]}' "
                f"in specimen '{specimens[j]}'"
            )

        for label, ids in (("taxon", taxa), ("specimen", specimens)):
            seen: set[str] = set()
            for identifier in ids:
                if identifier in seen:
                    raise DataValidationError(f"duplicate {label} id '{identifier}'")
                seen.add(identifier)

        object.__setattr__(self, "taxa_ids", taxa)
        object.__setattr__(self, "specimen_ids", specimens)
        object.__setattr__(self, "counts", _frozen(values))

    @property
    def n_taxa(self) -> int:
        return len(self.taxa_ids)

    @property
    def n_specimens(self) -> int:
        return len(self.specimen_ids)

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CountTable):
            return NotImplemented
        return (
            self.taxa_ids == other.taxa_ids
            and self.specimen_ids == other.specimen_ids
            and np.array_equal(self.counts, other.counts)
        )

    def __repr__(self) -> str:
        return f"CountTable(m={self.n_taxa}, N={self.n_specimens})"

    def to_frame(self) -> pd.DataFrame:
        """Return the counts as a DataFrame indexed by taxon, columns by specimen."""
        return pd.DataFrame(
            self.counts,
            index=pd.Index(self.taxa_ids, name="taxon_id"),
            columns=pd.Index(self.specimen_ids, name="specimen_id"),
        )

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "CountTable":
        """Build a CountTable from a taxa x specimen DataFrame."""
        if not isinstance(frame, pd.DataFrame):
            raise TypeError(f"Expected pandas DataFrame, got {type(frame).__name__}")
        return cls(
            [str(i) for i in frame.index],
            [str(c) for c in frame.columns],
            frame.to_numpy(),
        )

    def select(
        self,
        taxa: Sequence[str] | None = None,
        specimens: Sequence[str] | None = None,
    ) -> "CountTable":
        """
        Return a sub-table, keeping the canonical order of this table.

        Args:
            taxa: Taxon ids to keep (None keeps all)
            specimens: Specimen ids to keep (None keeps all)
        """
        row_mask = np.ones(self.n_taxa, dtype=bool)
        col_mask = np.ones(self.n_specimens, dtype=bool)
        if taxa is not None:
            wanted = set(taxa)
            row_mask = np.array([t in wanted for t in self.taxa_ids], dtype=bool)
        if specimens is not None:
            wanted = set(specimens)
            col_mask = np.array([s in wanted for s in self.specimen_ids], dtype=bool)
        return self.mask(row_mask, col_mask)

    def mask(self, row_mask: np.ndarray, col_mask: np.ndarray) -> "CountTable":
        """Return the sub-table selected by boolean row and column masks."""
        return CountTable(
            [t for t, keep in zip(self.taxa_ids, row_mask) if keep],
            [s for s, keep in zip(self.specimen_ids, col_mask) if keep],
            self.counts[np.ix_(row_mask, col_mask)],
        )

    def with_counts(self, counts: np.ndarray) -> "CountTable":
        """Return a table with the same identifiers and new counts."""
        return CountTable(self.taxa_ids, self.specimen_ids, counts)

    def taxon_index(self, taxon_id: str) -> int:
        try:
            return self.taxa_ids.index(taxon_id)
        except ValueError:
            raise KeyError(f"taxon '{taxon_id}' not in count table") from None

    def specimen_index(self, specimen_id: str) -> int:
        try:
            return self.specimen_ids.index(specimen_id)
        except ValueError:
            raise KeyError(f"specimen '{specimen_id}' not in count table") from None


def library_sizes(counts: CountTable) -> np.ndarray:
    """
    Column sums S_j of the count table, in specimen order.

    Raises:
        DataValidationError: If any specimen has zero reads
    """
    if not isinstance(counts, CountTable):
        raise TypeError(f"Expected CountTable, got {type(counts).__name__}")
    sizes = counts.counts.sum(axis=0)
    empty = [s for s, total in zip(counts.specimen_ids, sizes) if total == 0]
    if empty:
        raise DataValidationError(
            f"specimen(s) with zero reads: {', '.join(empty)}"
        )
    return sizes
