"""
File dataset readers and text parsers.
"""

from .delimited import parse_count_table, parse_sample_metadata, parse_taxonomy
from .newick import parse_newick
from .delimited_reader import DelimitedDatasetReader
from .json_dataset import JsonDatasetReader, dataset_from_payload, read_json

__all__ = [
    "parse_count_table",
    "parse_sample_metadata",
    "parse_taxonomy",
    "parse_newick",
    "DelimitedDatasetReader",
    "JsonDatasetReader",
    "dataset_from_payload",
    "read_json",
]
