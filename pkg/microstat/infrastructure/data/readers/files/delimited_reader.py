"""
Dataset reader for a set of delimited text files plus an optional Newick tree.
"""

import os
from typing import Any, Callable, Dict, List, Optional

from microstat.core.dataset import Dataset
from microstat.core.validation import require_valid
from microstat.shared import TransformableMixin, ordered_map
from ..base import DatasetReader
from .delimited import parse_count_table, parse_sample_metadata, parse_taxonomy
from .newick import parse_newick


def _checked_path(path: Optional[str], name: str) -> Optional[str]:
    if path is None:
        return None
    if not path:
        raise ValueError(f"{name} cannot be empty")

    abs_path = os.path.abspath(path)
    if not os.path.isfile(abs_path):
        raise FileNotFoundError(f"{name} file not found: {abs_path}")
    if not os.access(abs_path, os.R_OK):
        raise PermissionError(f"{name} file is not readable: {abs_path}")
    return abs_path


class DelimitedDatasetReader(DatasetReader, TransformableMixin):
    """
    Read counts, sample metadata, taxonomy and tree files into a Dataset.

    The files are parsed independently (in parallel when a thread cap is
    configured) and the assembled dataset is validated.

    Args:
        counts_path: Taxa x specimen count table
        samples_path: Sample metadata table
        taxonomy_path: Optional taxonomy table
        tree_path: Optional Newick tree
        delimiter: Field separator for the tables ('\\t' or ',')
        validate: Raise DataValidationError when the components disagree
        transformers: Optional dict of transformer lists to apply after loading
    """

    def __init__(
        self,
        counts_path: str,
        samples_path: str,
        taxonomy_path: Optional[str] = None,
        tree_path: Optional[str] = None,
        delimiter: str = "\t",
        validate: bool = True,
        transformers: Optional[Dict[str, List[Callable]]] = None,
    ):
        if counts_path is None or samples_path is None:
            raise ValueError("counts_path and samples_path are required")
        if delimiter not in ("\t", ",", ";"):
            raise ValueError(f"Invalid delimiter: {delimiter!r}. Must be one of: tab, ',', ';'")

        self.counts_path = _checked_path(counts_path, "counts")
        self.samples_path = _checked_path(samples_path, "samples")
        self.taxonomy_path = _checked_path(taxonomy_path, "taxonomy")
        self.tree_path = _checked_path(tree_path, "tree")
        self.delimiter = delimiter
        self.validate = validate
        self.transformers = transformers or {}

    def _parse(self, job: tuple[str, Optional[str]]) -> Any:
        kind, path = job
        if path is None:
            return None
        with open(path, encoding="utf-8", newline="") as handle:
            name = os.path.basename(path)
            if kind == "counts":
                return parse_count_table(handle, self.delimiter, source=name)
            if kind == "samples":
                return parse_sample_metadata(handle, self.delimiter, source=name)
            if kind == "taxonomy":
                return parse_taxonomy(handle, self.delimiter, source=name)
            return parse_newick(handle.read(), source=name)

    def load(self) -> Dataset:
        """
        Parse every file and assemble the dataset.

        Returns:
            Dataset: The loaded dataset

        Raises:
            ParseError: If a file is malformed
            DataValidationError: If validate is set and components disagree
        """
        counts, samples, taxonomy, tree = ordered_map(
            self._parse,
            [
                ("counts", self.counts_path),
                ("samples", self.samples_path),
                ("taxonomy", self.taxonomy_path),
                ("tree", self.tree_path),
            ],
        )
        dataset = Dataset(counts=counts, samples=samples, taxonomy=taxonomy, tree=tree)
        if self.validate:
            require_valid(dataset)

        return self._apply_transformers(dataset, "after")
