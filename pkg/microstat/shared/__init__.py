"""
Shared utilities: mixins, errors, random streams and parallel helpers.
"""

from .mixins import TransformableMixin
from .errors import (
    DataValidationError,
    MicrostatError,
    NumericalError,
    ParseError,
    StatisticalWarning,
    UsageError,
    Violation,
)
from .random import make_rng, spawn, spawn_rngs
from .parallel import ordered_map

__all__ = [
    "TransformableMixin",
    "DataValidationError",
    "MicrostatError",
    "NumericalError",
    "ParseError",
    "StatisticalWarning",
    "UsageError",
    "Violation",
    "make_rng",
    "spawn",
    "spawn_rngs",
    "ordered_map",
]
