"""
Visualization components.
"""

from .ordination import OrdinationVisualizer
from .ppc import PpcVisualizer

__all__ = ["OrdinationVisualizer", "PpcVisualizer"]
