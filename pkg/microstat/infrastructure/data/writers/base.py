"""
Base abstract class for data writers.
"""

from abc import ABC, abstractmethod
from typing import Any


class DataWriter(ABC):
    """
    Abstract base class for all data writer implementations.

    All data writer implementations must inherit from this class
    and implement the write() method.
    """

    @abstractmethod
    def write(self, value: Any) -> None:
        """
        Write a result to the output destination.

        Args:
            value: The result to write (a Dataset, DataFrame or JSON payload)
        """
        pass
