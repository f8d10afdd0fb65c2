"""
Dataset readers for various sources.
"""

from .base import DatasetReader
from .files import DelimitedDatasetReader, JsonDatasetReader

__all__ = ["DatasetReader", "DelimitedDatasetReader", "JsonDatasetReader"]
