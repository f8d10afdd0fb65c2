"""
Reader for the self-describing JSON dataset document.
"""

import json
import os
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from microstat.core.count_table import CountTable
from microstat.core.dataset import Dataset
from microstat.core.samples import SampleMetadata
from microstat.core.taxonomy import TaxonomyTable
from microstat.core.validation import require_valid
from microstat.shared import DataValidationError, ParseError, TransformableMixin
from ..base import DatasetReader
from .newick import parse_newick

DATASET_FORMAT = "microstat-dataset"
SUPPORTED_VERSIONS = (1,)


def dataset_from_payload(payload: Any, source: Optional[str] = None) -> Dataset:
    """
    Rebuild a Dataset from its JSON document.

    Raises:
        ParseError: If the document is not a microstat dataset or a section
            is missing or malformed
    """
    if not isinstance(payload, dict) or payload.get("format") != DATASET_FORMAT:
        raise ParseError(f"not a {DATASET_FORMAT} document", source=source)
    if payload.get("version") not in SUPPORTED_VERSIONS:
        raise ParseError(
            f"unsupported dataset version {payload.get('version')!r}. "
            f"Supported: {list(SUPPORTED_VERSIONS)}",
            source=source,
        )

    try:
        counts_doc = payload["counts"]
        counts = CountTable(
            counts_doc["taxa_ids"],
            counts_doc["specimen_ids"],
            np.array(counts_doc["data"], dtype=np.int64).reshape(
                len(counts_doc["taxa_ids"]), len(counts_doc["specimen_ids"])
            ),
        )
        samples = tuple(SampleMetadata.from_record(r) for r in payload["samples"])

        taxonomy = None
        if payload.get("taxonomy"):
            doc = payload["taxonomy"]
            taxonomy = TaxonomyTable(
                tuple(doc["taxon_ids"]),
                tuple(tuple(row) for row in doc["assignments"]),
                tuple(doc["ranks"]),
            )
    except KeyError as e:
        raise ParseError(f"missing field {e} in dataset document", source=source) from None
    except (TypeError, ValueError) as e:
        if isinstance(e, DataValidationError):
            raise
        raise ParseError(f"malformed dataset document: {e}", source=source) from None

    tree = None
    if payload.get("tree"):
        tree = parse_newick(payload["tree"], source=source)

    size_factors = payload.get("size_factors")
    return Dataset(
        counts=counts,
        samples=samples,
        taxonomy=taxonomy,
        tree=tree,
        size_factors=None if size_factors is None else np.array(size_factors, dtype=float),
    )


def read_json(path: str) -> Any:
    """
    Read a JSON file.

    Raises:
        FileNotFoundError: If the file does not exist
        ParseError: If the file is not valid JSON
    """
    abs_path = os.path.abspath(path)
    if not os.path.isfile(abs_path):
        raise FileNotFoundError(f"JSON file not found: {abs_path}")
    with open(abs_path, encoding="utf-8") as handle:
        try:
            return json.load(handle)
        except json.JSONDecodeError as e:
            raise ParseError(
                e.msg, line=e.lineno, column=e.colno, source=os.path.basename(abs_path)
            ) from None


class JsonDatasetReader(DatasetReader, TransformableMixin):
    """
    Load a Dataset written by JsonDatasetWriter.

    Args:
        file_path: Path to the dataset JSON document
        validate: Raise DataValidationError when the components disagree
        transformers: Optional dict of transformer lists to apply after loading
    """

    def __init__(
        self,
        file_path: str,
        validate: bool = True,
        transformers: Optional[Dict[str, List[Callable]]] = None,
    ):
        if not file_path:
            raise ValueError("file_path cannot be empty")

        abs_path = os.path.abspath(file_path)
        if not os.path.isfile(abs_path):
            raise FileNotFoundError(f"Dataset file not found: {abs_path}")
        if not os.access(abs_path, os.R_OK):
            raise PermissionError(f"Dataset file is not readable: {abs_path}")

        self.file_path = abs_path
        self.validate = validate
        self.transformers = transformers or {}

    def load(self) -> Dataset:
        """
        Load the dataset.

        Raises:
            ParseError: If the document is malformed
            DataValidationError: If validate is set and components disagree
        """
        payload = read_json(self.file_path)
        dataset = dataset_from_payload(payload, source=os.path.basename(self.file_path))
        if self.validate:
            require_valid(dataset)

        return self._apply_transformers(dataset, "after")
