"""
File data writers.
"""

from .json_dataset import JsonDatasetWriter, checked_output_path, dataset_to_payload, write_json
from .csv_table import CsvTableWriter

__all__ = [
    "JsonDatasetWriter",
    "CsvTableWriter",
    "checked_output_path",
    "dataset_to_payload",
    "write_json",
]
