"""
Data writers for various destinations.
"""

from .base import DataWriter
from .files import CsvTableWriter, JsonDatasetWriter

__all__ = ["DataWriter", "CsvTableWriter", "JsonDatasetWriter"]
