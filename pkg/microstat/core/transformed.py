"""
Real-valued tables derived from a CountTable.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Sequence

import numpy as np
import pandas as pd

from .count_table import CountTable


class TransformTag(str, Enum):
    ANSCOMBE = "anscombe"
    TRUNCATED_RANK = "truncated_rank"
    PRESENCE_ABSENCE = "presence_absence"
    SCALED = "scaled"


@dataclass(frozen=True, eq=False)
class TransformedTable:
    """
    Transformed values with the identifiers of their source table.

    Args:
        taxa_ids: Taxon identifiers (rows)
        specimen_ids: Specimen identifiers (columns)
        values: m x N real matrix
        transform_tag: Which transform produced the values
        params: Parameters needed to re-derive values from the source
            counts (c, per-taxon k, threshold t, tau, size factors)
        flags: Non-fatal conditions raised while transforming
    """

    taxa_ids: tuple[str, ...]
    specimen_ids: tuple[str, ...]
    values: np.ndarray
    transform_tag: TransformTag
    params: dict[str, Any] = field(default_factory=dict)
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        taxa = tuple(self.taxa_ids)
        specimens = tuple(self.specimen_ids)
        if values.shape != (len(taxa), len(specimens)):
            raise ValueError(
                f"values shape {values.shape} does not match "
                f"{len(taxa)} taxa x {len(specimens)} specimens"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "taxa_ids", taxa)
        object.__setattr__(self, "specimen_ids", specimens)
        object.__setattr__(self, "transform_tag", TransformTag(self.transform_tag))
        object.__setattr__(self, "flags", tuple(self.flags))

    @classmethod
    def like(
        cls,
        source: CountTable,
        values: np.ndarray,
        tag: TransformTag,
        params: dict[str, Any],
        flags: Sequence[str] = (),
    ) -> "TransformedTable":
        """Wrap values computed from ``source``, copying its identifiers."""
        return cls(source.taxa_ids, source.specimen_ids, values, tag, params, tuple(flags))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            self.values,
            index=pd.Index(self.taxa_ids, name="taxon_id"),
            columns=pd.Index(self.specimen_ids, name="specimen_id"),
        )
