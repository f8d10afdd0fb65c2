"""
Self-describing JSON dataset documents and JSON payload writing.

Document layout (``format`` = "microstat-dataset", ``version`` = 1)::

    {
      "format": "microstat-dataset",
      "version": 1,
      "counts": {"taxa_ids": [...], "specimen_ids": [...], "data": [[int, ...], ...]},
      "samples": [{"specimen_id": ..., "specimen_type": ..., "subject_id": ...,
                   "batch": int, "group": ..., "pair_id": ..., <extra columns>}, ...],
      "taxonomy": {"ranks": [...], "taxon_ids": [...], "assignments": [[...], ...]} | null,
      "tree": "<newick string>" | null,
      "size_factors": [float, ...] | null
    }

Floats are written with Python's shortest round-trip repr, so size factors
and branch lengths survive a write/read cycle exactly.
"""

import json
import os
from typing import Any, Callable, Dict, List, Optional

from microstat.core.dataset import Dataset
from microstat.shared import TransformableMixin
from ..base import DataWriter

DATASET_FORMAT = "microstat-dataset"
DATASET_VERSION = 1


def checked_output_path(path: str) -> str:
    """
    Resolve an output path, requiring an existing writable parent directory.

    Raises:
        ValueError: If path is empty
        FileNotFoundError: If the parent directory does not exist
        PermissionError: If the parent directory is not writable
    """
    if not path:
        raise ValueError("output path cannot be empty")

    abs_path = os.path.abspath(path)
    parent_dir = os.path.dirname(abs_path)
    if not os.path.isdir(parent_dir):
        raise FileNotFoundError(f"Parent directory does not exist: {parent_dir}")
    if not os.access(parent_dir, os.W_OK):
        raise PermissionError(f"Parent directory is not writable: {parent_dir}")
    return abs_path


def dataset_to_payload(dataset: Dataset) -> dict[str, Any]:
    """Convert a Dataset into its JSON document."""
    taxonomy = None
    if dataset.taxonomy is not None:
        taxonomy = {
            "ranks": list(dataset.taxonomy.ranks),
            "taxon_ids": list(dataset.taxonomy.taxon_ids),
            "assignments": [list(row) for row in dataset.taxonomy.assignments],
        }
    return {
        "format": DATASET_FORMAT,
        "version": DATASET_VERSION,
        "counts": {
            "taxa_ids": list(dataset.counts.taxa_ids),
            "specimen_ids": list(dataset.counts.specimen_ids),
            "data": dataset.counts.counts.tolist(),
        },
        "samples": [s.to_record() for s in dataset.samples],
        "taxonomy": taxonomy,
        "tree": None if dataset.tree is None else dataset.tree.to_newick(),
        "size_factors": (
            None if dataset.size_factors is None else [float(d) for d in dataset.size_factors]
        ),
    }


def write_json(path: str, payload: Any) -> None:
    """Write a JSON payload with sorted keys and a trailing newline."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True, allow_nan=True)
        handle.write("\n")


class JsonDatasetWriter(DataWriter, TransformableMixin):
    """
    Write a Dataset as a single JSON document.

    Args:
        file_path: Destination file
        transformers: Optional dict of transformer lists to apply before writing
    """

    def __init__(
        self,
        file_path: str,
        transformers: Optional[Dict[str, List[Callable]]] = None,
    ):
        self.file_path = checked_output_path(file_path)
        self.transformers = transformers or {}

    def write(self, value: Dataset) -> None:
        """
        Write the dataset.

        Raises:
            TypeError: If value is not a Dataset
        """
        if not isinstance(value, Dataset):
            raise TypeError(f"Expected Dataset, got {type(value).__name__}")

        value = self._apply_transformers(value, "before")
        write_json(self.file_path, dataset_to_payload(value))
