"""
Shared mixins for common functionality.
"""

from typing import Any

STAGES = ("before", "after")


class TransformableMixin:
    """
    Mixin that provides transformer application functionality.

    Components that need to apply transformers should inherit from this mixin
    and set self.transformers in their __init__ method. Transformers operate
    on whatever value the component produces (usually a Dataset).

    Usage:
        class MyReader(TransformableMixin):
            def __init__(self, transformers=None):
                self.transformers = transformers or {}

            def load(self):
                dataset = ...
                return self._apply_transformers(dataset, 'after')
    """

    def _apply_transformers(self, value: Any, stage: str) -> Any:
        """
        Apply transformers for a specific stage.

        Args:
            value: Value to transform
            stage: Stage name ('before' or 'after')

        Returns:
            The transformed value

        Raises:
            ValueError: If stage is not 'before' or 'after'
            TypeError: If transformer doesn't have proper interface
        """
        if stage not in STAGES:
            raise ValueError(f"Invalid transformer stage: {stage!r}. Must be one of: {STAGES}")
        if not hasattr(self, "transformers"):
            return value

        if stage not in self.transformers:
            return value

        result = value
        for transformer in self.transformers[stage]:
            # Support .filter() method (for filters)
            if hasattr(transformer, "filter"):
                result = transformer.filter(result)
            # Support callable objects (for any transformer)
            elif callable(transformer):
                result = transformer(result)
            else:
                raise TypeError(
                    f"Transformer must have a .filter() method or "
                    f"be callable. Got: {type(transformer).__name__}"
                )

        return result
