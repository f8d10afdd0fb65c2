"""
CSV table writer.
"""

from typing import Callable, Dict, List, Optional

import pandas as pd

from microstat.shared import TransformableMixin
from ..base import DataWriter
from .json_dataset import checked_output_path

FLOAT_FORMAT = "%.10g"


class CsvTableWriter(DataWriter, TransformableMixin):
    """
    Write a DataFrame as CSV with one header line.

    Floats use a fixed format so repeated runs produce identical bytes.

    Args:
        file_path: Destination file
        index: Write the DataFrame index as the first column
        float_format: printf-style float format
        transformers: Optional dict of transformer lists to apply before writing
    """

    def __init__(
        self,
        file_path: str,
        index: bool = False,
        float_format: str = FLOAT_FORMAT,
        transformers: Optional[Dict[str, List[Callable]]] = None,
    ):
        self.file_path = checked_output_path(file_path)
        self.index = index
        self.float_format = float_format
        self.transformers = transformers or {}

    def write(self, value: pd.DataFrame) -> None:
        """
        Write the table.

        Raises:
            TypeError: If value is not a DataFrame
        """
        if not isinstance(value, pd.DataFrame):
            raise TypeError(f"Expected pandas DataFrame, got {type(value).__name__}")

        value = self._apply_transformers(value, "before")
        value.to_csv(
            self.file_path,
            index=self.index,
            float_format=self.float_format,
            lineterminator="\n",
            na_rep="NA",
        )
