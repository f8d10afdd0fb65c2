"""
Per-specimen metadata.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

import pandas as pd


class SpecimenType(str, Enum):
    BIOLOGICAL = "biological"
    NEGATIVE_CONTROL = "negative_control"

    @classmethod
    def parse(cls, value: Any) -> "SpecimenType":
        """Parse a specimen type, accepting a few common spellings."""
        if isinstance(value, SpecimenType):
            return value
        text = str(value).strip().lower().replace("-", "_").replace(" ", "_")
        aliases = {
            "biological": cls.BIOLOGICAL,
            "sample": cls.BIOLOGICAL,
            "negative_control": cls.NEGATIVE_CONTROL,
            "control": cls.NEGATIVE_CONTROL,
            "negative": cls.NEGATIVE_CONTROL,
        }
        if text not in aliases:
            raise ValueError(
                f"Invalid specimen_type: '{value}'. "
                f"Must be one of: {[t.value for t in cls]}"
            )
        return aliases[text]


@dataclass(frozen=True)
class SampleMetadata:
    """
    Covariates of one specimen.

    Args:
        specimen_id: Identifier matching a CountTable column
        specimen_type: Biological specimen or negative control
        subject_id: Subject (host, plant) the specimen came from
        batch: Sequencing run / batch number
        group: Optional categorical label (e.g. treatment arm)
        pair_id: Optional pairing key for paired designs
        extra: Any additional metadata columns, kept as strings
    """

    specimen_id: str
    specimen_type: SpecimenType = SpecimenType.BIOLOGICAL
    subject_id: Optional[str] = None
    batch: int = 0
    group: Optional[str] = None
    pair_id: Optional[str] = None
    extra: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.specimen_id:
            raise ValueError("specimen_id cannot be empty")
        object.__setattr__(self, "specimen_type", SpecimenType.parse(self.specimen_type))
        if not isinstance(self.batch, int) or isinstance(self.batch, bool):
            raise TypeError(f"batch must be an integer, got {type(self.batch).__name__}")

    @property
    def is_control(self) -> bool:
        return self.specimen_type is SpecimenType.NEGATIVE_CONTROL

    def get(self, column: str) -> Optional[str]:
        """Look up a metadata column by name (core fields first, then extras)."""
        if column in ("specimen_id", "subject_id", "group", "pair_id"):
            return getattr(self, column)
        if column == "specimen_type":
            return self.specimen_type.value
        if column == "batch":
            return str(self.batch)
        return self.extra.get(column)

    def to_record(self) -> dict[str, Any]:
        record: dict[str, Any] = {
            "specimen_id": self.specimen_id,
            "specimen_type": self.specimen_type.value,
            "subject_id": self.subject_id,
            "batch": self.batch,
            "group": self.group,
            "pair_id": self.pair_id,
        }
        record.update(self.extra)
        return record

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "SampleMetadata":
        core = {"specimen_id", "specimen_type", "subject_id", "batch", "group", "pair_id"}

        def _optional(name: str) -> Optional[str]:
            value = record.get(name)
            if value is None or (isinstance(value, float) and pd.isna(value)):
                return None
            text = str(value).strip()
            return text or None

        batch = record.get("batch")
        return cls(
            specimen_id=str(record["specimen_id"]),
            specimen_type=SpecimenType.parse(record.get("specimen_type", "biological")),
            subject_id=_optional("subject_id"),
            batch=int(batch) if batch not in (None, "") else 0,
            group=_optional("group"),
            pair_id=_optional("pair_id"),
            extra={
                str(k): str(v)
                for k, v in record.items()
                if k not in core and v is not None and str(v) != ""
            },
        )


def samples_frame(samples: tuple[SampleMetadata, ...]) -> pd.DataFrame:
    """Tabulate sample metadata, one row per specimen."""
    frame = pd.DataFrame([s.to_record() for s in samples])
    return frame.set_index("specimen_id", drop=False)
