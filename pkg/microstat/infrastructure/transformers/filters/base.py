"""
Base class for dataset filters.
"""

from abc import ABC, abstractmethod

from microstat.core.dataset import Dataset


class DatasetFilter(ABC):
    """
    Abstract base class for dataset filters.

    Filters take a Dataset and return a new Dataset; they can be passed to
    any reader or writer as a transformer.
    """

    @abstractmethod
    def filter(self, dataset: Dataset) -> Dataset:
        """
        Filter a dataset.

        Args:
            dataset: Input dataset

        Returns:
            Dataset: Filtered dataset
        """
        pass
