"""
Taxonomic assignments per taxon.
"""

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import pandas as pd

RANKS: tuple[str, ...] = ("Kingdom", "Phylum", "Class", "Order", "Family", "Genus")


@dataclass(frozen=True)
class TaxonomyTable:
    """
    Ordered Kingdom..Genus assignments for each taxon.

    Args:
        taxon_ids: Taxon identifiers, in table order
        assignments: One tuple per taxon, aligned with ``ranks``; None marks
            an unassigned rank
        ranks: Rank names (defaults to Kingdom..Genus)
    """

    taxon_ids: tuple[str, ...]
    assignments: tuple[tuple[Optional[str], ...], ...]
    ranks: tuple[str, ...] = RANKS

    def __post_init__(self):
        object.__setattr__(self, "taxon_ids", tuple(str(t) for t in self.taxon_ids))
        object.__setattr__(self, "ranks", tuple(self.ranks))
        rows = tuple(tuple(row) for row in self.assignments)
        if len(rows) != len(self.taxon_ids):
            raise ValueError(
                f"{len(rows)} assignment rows for {len(self.taxon_ids)} taxa"
            )
        for taxon, row in zip(self.taxon_ids, rows):
            if len(row) != len(self.ranks):
                raise ValueError(
                    f"taxon '{taxon}' has {len(row)} ranks, expected {len(self.ranks)}"
                )
        object.__setattr__(self, "assignments", rows)

    def rank_of(self, taxon_id: str, rank: str) -> Optional[str]:
        """Return the assignment of a taxon at a rank (None if unassigned)."""
        if rank not in self.ranks:
            raise KeyError(f"unknown rank '{rank}'. Available: {list(self.ranks)}")
        try:
            row = self.assignments[self.taxon_ids.index(taxon_id)]
        except ValueError:
            return None
        return row[self.ranks.index(rank)]

    def lookup(self) -> Mapping[str, tuple[Optional[str], ...]]:
        return dict(zip(self.taxon_ids, self.assignments))

    def subset(self, taxon_ids: Sequence[str]) -> "TaxonomyTable":
        """Keep only the given taxa (in the order of this table)."""
        keep = set(taxon_ids)
        pairs = [(t, a) for t, a in zip(self.taxon_ids, self.assignments) if t in keep]
        return TaxonomyTable(
            tuple(t for t, _ in pairs), tuple(a for _, a in pairs), self.ranks
        )

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(list(self.assignments), columns=list(self.ranks))
        frame.insert(0, "taxon_id", list(self.taxon_ids))
        return frame
