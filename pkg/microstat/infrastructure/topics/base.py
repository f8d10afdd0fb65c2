"""
Base abstract class for topic models.
"""

from abc import ABC, abstractmethod

from microstat.core.dataset import Dataset
from .fit import TopicFit


class TopicModel(ABC):
    """
    Abstract base class for all topic model implementations.

    All topic model implementations must inherit from this class
    and implement the fit() method.
    """

    @abstractmethod
    def fit(self, dataset: Dataset) -> TopicFit:
        """
        Fit the model to a dataset's count table.

        Args:
            dataset: Dataset whose specimens are treated as documents

        Returns:
            TopicFit: Posterior draws with alignment and diagnostics
        """
        pass
