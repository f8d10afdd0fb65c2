"""
Base abstract class for decontaminators.
"""

from abc import ABC, abstractmethod
from typing import Any

from microstat.core.dataset import Dataset


class Decontaminator(ABC):
    """
    Abstract base class for all decontaminator implementations.

    All decontaminator implementations must inherit from this class
    and implement the decontaminate() method.
    """

    @abstractmethod
    def decontaminate(self, dataset: Dataset) -> tuple[list[Any], Dataset]:
        """
        Call contaminants and remove them from the dataset.

        Args:
            dataset: Dataset with negative controls and size factors

        Returns:
            tuple: (per-cell call records, cleaned Dataset)
        """
        pass
