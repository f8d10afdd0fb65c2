"""
Base abstract class for dataset readers.
"""

from abc import ABC, abstractmethod

from microstat.core.dataset import Dataset


class DatasetReader(ABC):
    """
    Abstract base class for all dataset readers.

    All dataset reader implementations must inherit from this class
    and implement the load() method.
    """

    @abstractmethod
    def load(self) -> Dataset:
        """
        Load a dataset from the source.

        Returns:
            Dataset: The loaded dataset
        """
        pass
