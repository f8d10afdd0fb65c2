"""
Cross-component consistency checks for a Dataset.
"""

from collections import Counter

import numpy as np

from microstat.shared.errors import DataValidationError, Violation
from .dataset import Dataset


def validate(dataset: Dataset) -> list[Violation]:
    """
    Check every invariant that ties the dataset components together.

    Per-component invariants (non-negative integer counts, a single rooted
    acyclic tree, ...) are enforced when the components are built; this
    function reports what only shows up once they are combined.

    Args:
        dataset: Dataset to check

    Returns:
        list[Violation]: Empty iff the dataset is consistent
    """
    if not isinstance(dataset, Dataset):
        raise TypeError(f"Expected Dataset, got {type(dataset).__name__}")

    violations: list[Violation] = []
    count_specimens = set(dataset.counts.specimen_ids)
    count_taxa = set(dataset.counts.taxa_ids)

    metadata_ids = [s.specimen_id for s in dataset.samples]
    for specimen, n in Counter(metadata_ids).items():
        if n > 1:
            violations.append(
                Violation(specimen, "duplicate_metadata", f"listed {n} times in sample metadata")
            )
    for specimen in dict.fromkeys(metadata_ids):
        if specimen not in count_specimens:
            violations.append(
                Violation(specimen, "unknown_specimen", "in sample metadata but not in counts")
            )
    listed = set(metadata_ids)
    for specimen in dataset.counts.specimen_ids:
        if specimen not in listed:
            violations.append(
                Violation(specimen, "missing_metadata", "in counts but not in sample metadata")
            )

    if not any(not s.is_control for s in dataset.samples if s.specimen_id in count_specimens):
        violations.append(
            Violation("*", "no_biological_specimen", "dataset has no biological specimen")
        )

    if dataset.taxonomy is not None:
        for taxon, n in Counter(dataset.taxonomy.taxon_ids).items():
            if n > 1:
                violations.append(
                    Violation(taxon, "duplicate_taxonomy", f"listed {n} times in taxonomy")
                )
        for taxon in dict.fromkeys(dataset.taxonomy.taxon_ids):
            if taxon not in count_taxa:
                violations.append(
                    Violation(taxon, "unknown_taxon", "in taxonomy but not in counts")
                )

    if dataset.tree is not None:
        labels = [dataset.tree.labels[i] for i in dataset.tree.leaves()]
        for label, n in Counter(lab for lab in labels if lab is not None).items():
            if n > 1:
                violations.append(
                    Violation(label, "duplicate_leaf_label", f"tree has {n} leaves with this label")
                )

    if dataset.size_factors is not None:
        for specimen, factor in zip(dataset.counts.specimen_ids, dataset.size_factors):
            if not np.isfinite(factor) or factor <= 0:
                violations.append(
                    Violation(specimen, "size_factor", f"size factor must be > 0, got {factor}")
                )

    return violations


def require_valid(dataset: Dataset) -> Dataset:
    """
    Raise if the dataset has any violation, otherwise return it unchanged.

    Raises:
        DataValidationError: Listing every violation found
    """
    violations = validate(dataset)
    if violations:
        details = "; ".join(str(v) for v in violations)
        raise DataValidationError(f"dataset failed validation: {details}", violations)
    return dataset
