"""
Read-depth, prevalence and taxonomy filtering of a Dataset.
"""

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from microstat.core.dataset import Dataset
from microstat.shared.errors import DataValidationError
from .base import DatasetFilter


@dataclass(frozen=True)
class TaxonomyRule:
    """
    Match taxa by their assignment at one rank.

    A value starting with '~' matches as a case-insensitive substring
    (``Order=~chloroplast``); otherwise the match is case-insensitive and
    exact.
    """

    rank: str
    value: str

    def __post_init__(self):
        if not self.rank or not self.value or self.value == "~":
            raise ValueError(f"Invalid taxonomy rule: {self.rank!r}={self.value!r}")

    @classmethod
    def parse(cls, text: Union[str, "TaxonomyRule", Sequence[str]]) -> "TaxonomyRule":
        """Build a rule from 'Rank=value', a (rank, value) pair or a rule."""
        if isinstance(text, TaxonomyRule):
            return text
        if isinstance(text, str):
            if "=" not in text:
                raise ValueError(f"Invalid taxonomy rule: '{text}'. Expected 'Rank=value'")
            rank, value = text.split("=", 1)
            return cls(rank.strip(), value.strip())
        rank, value = text
        return cls(str(rank), str(value))

    def matches(self, assignment: Optional[str]) -> bool:
        if assignment is None:
            return False
        if self.value.startswith("~"):
            return self.value[1:].lower() in assignment.lower()
        return assignment.lower() == self.value.lower()


@dataclass(frozen=True)
class FilterSpec:
    """
    Filtering thresholds and taxonomy screens.

    Args:
        min_reads_per_specimen: Drop specimens with fewer reads
        min_count: Read threshold used by the prevalence rule
        min_specimens: Keep taxa with at least min_count reads in at least
            this many specimens
        drop_taxonomy: Taxa matching any rule are dropped
        require_rank: Taxa unassigned at any of these ranks are dropped
        exclude_specimens: Specimen ids removed outright (e.g. a failed run)
        keep_controls: Exempt negative controls from the read-depth threshold
    """

    min_reads_per_specimen: int = 800
    min_count: int = 0
    min_specimens: int = 0
    drop_taxonomy: tuple[TaxonomyRule, ...] = ()
    require_rank: tuple[str, ...] = ()
    exclude_specimens: tuple[str, ...] = ()
    keep_controls: bool = True

    def __post_init__(self):
        for name in ("min_reads_per_specimen", "min_count", "min_specimens"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
                raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
            if value < 0:
                raise ValueError(f"{name} must be >= 0, got {value}")
        object.__setattr__(
            self, "drop_taxonomy", tuple(TaxonomyRule.parse(r) for r in self.drop_taxonomy)
        )
        object.__setattr__(self, "require_rank", tuple(self.require_rank))
        object.__setattr__(self, "exclude_specimens", tuple(self.exclude_specimens))

    @property
    def uses_taxonomy(self) -> bool:
        return bool(self.drop_taxonomy or self.require_rank)


def _taxonomy_mask(dataset: Dataset, spec: FilterSpec) -> np.ndarray:
    """True for taxa that pass the taxonomy screens."""
    keep = np.ones(dataset.counts.n_taxa, dtype=bool)
    if not spec.uses_taxonomy:
        return keep
    taxonomy = dataset.taxonomy
    if taxonomy is None:
        raise DataValidationError("taxonomy rules given but the dataset has no taxonomy")

    rank_lookup = {r.lower(): i for i, r in enumerate(taxonomy.ranks)}
    for rank in [r.rank for r in spec.drop_taxonomy] + list(spec.require_rank):
        if rank.lower() not in rank_lookup:
            raise ValueError(f"unknown rank '{rank}'. Available: {list(taxonomy.ranks)}")

    assignments = taxonomy.lookup()
    empty = (None,) * len(taxonomy.ranks)
    for i, taxon in enumerate(dataset.counts.taxa_ids):
        row = assignments.get(taxon, empty)
        if any(rule.matches(row[rank_lookup[rule.rank.lower()]]) for rule in spec.drop_taxonomy):
            keep[i] = False
        elif any(row[rank_lookup[rank.lower()]] is None for rank in spec.require_rank):
            keep[i] = False
    return keep


def filter_dataset(dataset: Dataset, spec: FilterSpec) -> Dataset:
    """
    Apply a FilterSpec.

    Specimen depth and taxon prevalence depend on each other (dropping taxa
    lowers library sizes), so the two rules are applied alternately until
    nothing changes; the result is a fixed point and filtering it again is
    a no-op. The tree, taxonomy and size factors follow the surviving
    identifiers.

    Args:
        dataset: Validated dataset
        spec: Filtering rules

    Returns:
        Dataset: Filtered dataset

    Raises:
        DataValidationError: If filtering removes every taxon, every
            specimen or every biological specimen
    """
    if not isinstance(dataset, Dataset):
        raise TypeError(f"Expected Dataset, got {type(dataset).__name__}")
    if not isinstance(spec, FilterSpec):
        raise TypeError(f"Expected FilterSpec, got {type(spec).__name__}")

    excluded = set(spec.exclude_specimens)
    if excluded:
        mask = np.array([s not in excluded for s in dataset.specimen_ids], dtype=bool)
        dataset = _subset_specimens(dataset, mask)

    taxa_mask = _taxonomy_mask(dataset, spec)
    if not taxa_mask.all():
        dataset = _subset_taxa(dataset, taxa_mask)

    while True:
        counts = dataset.counts.counts
        depth_ok = counts.sum(axis=0) >= spec.min_reads_per_specimen
        if spec.keep_controls:
            depth_ok |= dataset.control_mask()
        changed = False
        if not depth_ok.all():
            dataset = _subset_specimens(dataset, depth_ok)
            changed = True

        prevalence = (dataset.counts.counts >= spec.min_count).sum(axis=1)
        prevalent = prevalence >= spec.min_specimens
        if not prevalent.all():
            dataset = _subset_taxa(dataset, prevalent)
            changed = True

        if not changed:
            break

    if not dataset.control_mask().size or dataset.control_mask().all():
        raise DataValidationError("filtering removed every biological specimen")
    return dataset


def _subset_specimens(dataset: Dataset, mask: np.ndarray) -> Dataset:
    if not mask.any():
        raise DataValidationError("filtering removed every specimen")
    return dataset.subset_specimens(mask)


def _subset_taxa(dataset: Dataset, mask: np.ndarray) -> Dataset:
    if not mask.any():
        raise DataValidationError("filtering removed every taxon")
    return dataset.subset_taxa(mask)


class SpecFilter(DatasetFilter):
    """
    DatasetFilter wrapper around :func:`filter_dataset`.

    Args:
        spec: Filtering rules (defaults to FilterSpec())
        rules: Keyword overrides used to build a FilterSpec when spec is None
    """

    def __init__(self, spec: Optional[FilterSpec] = None, **rules):
        if spec is not None and rules:
            raise ValueError("pass either a FilterSpec or keyword rules, not both")
        self.spec = spec if spec is not None else FilterSpec(**rules)

    def filter(self, dataset: Dataset) -> Dataset:
        return filter_dataset(dataset, self.spec)


def parse_rules(rules: Iterable[str]) -> tuple[TaxonomyRule, ...]:
    """Parse 'Rank=value' strings into TaxonomyRules."""
    return tuple(TaxonomyRule.parse(r) for r in rules)
