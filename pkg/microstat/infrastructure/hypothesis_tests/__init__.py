"""
Permutation tests on distance matrices and the strain-switching power harness.
"""

from .base import (
    PermTestResult,
    PermutationScheme,
    PermutationTest,
    encode_blocks,
    encode_groups,
    permutation_p_value,
    permuted_codes,
)
from .permanova import PermanovaTest, permanova, pseudo_f
from .mst import MstTest, minimum_spanning_tree, mst_pure_edge_test
from .network import ThresholdNetwork, threshold_network
from .power import PowerCurve, power_frame, strain_switch_power

__all__ = [
    "PermTestResult",
    "PermutationScheme",
    "PermutationTest",
    "encode_blocks",
    "encode_groups",
    "permutation_p_value",
    "permuted_codes",
    "PermanovaTest",
    "permanova",
    "pseudo_f",
    "MstTest",
    "minimum_spanning_tree",
    "mst_pure_edge_test",
    "ThresholdNetwork",
    "threshold_network",
    "PowerCurve",
    "power_frame",
    "strain_switch_power",
]
