"""
Shared pieces of the permutation tests: result type, label encoding,
permutation generation and the base abstract class.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from microstat.shared import ordered_map
from microstat.shared.errors import DataValidationError
from microstat.shared.random import SeedLike, make_rng, spawn
from microstat.infrastructure.ordination.base import DistanceMatrix

PERMUTATION_BATCH = 1000
TIE_TOL = 1e-12


class PermutationScheme(str, Enum):
    FREE = "free"
    WITHIN_BLOCK = "within_block"


@dataclass(frozen=True)
class PermTestResult:
    """
    Outcome of a permutation test.

    p_value = (1 + #{permuted >= observed}) / (n_perm + 1).
    """

    statistic_observed: float
    p_value: float
    n_perm: int
    permutation_scheme: PermutationScheme
    seed: int
    method: str = ""
    statistic_name: str = ""
    flags: tuple[str, ...] = ()

    def to_record(self) -> dict:
        return {
            "method": self.method,
            "statistic": self.statistic_name,
            "statistic_observed": self.statistic_observed,
            "p_value": self.p_value,
            "n_perm": self.n_perm,
            "permutation_scheme": self.permutation_scheme.value,
            "seed": self.seed,
            "flags": ";".join(self.flags),
        }


def encode_groups(groups: Sequence, min_size: int = 2) -> tuple[np.ndarray, list]:
    """
    Integer codes for group labels (levels in sorted order).

    Raises:
        DataValidationError: If a label is missing, there are fewer than two
            levels, or a level has fewer than ``min_size`` specimens
    """
    labels = list(groups)
    if any(g is None for g in labels):
        raise DataValidationError("every specimen needs a group label")
    levels = sorted(set(labels), key=str)
    if len(levels) < 2:
        raise DataValidationError(f"need at least 2 groups, got {len(levels)}: {levels}")
    lookup = {level: code for code, level in enumerate(levels)}
    codes = np.array([lookup[g] for g in labels], dtype=np.int64)
    sizes = np.bincount(codes, minlength=len(levels))
    small = [str(level) for level, size in zip(levels, sizes) if size < min_size]
    if small:
        raise DataValidationError(
            f"group(s) with fewer than {min_size} specimens: {', '.join(small)}"
        )
    return codes, levels


def encode_blocks(blocks: Optional[Sequence], codes: np.ndarray) -> Optional[list[np.ndarray]]:
    """
    Index sets of the permutation blocks.

    Raises:
        DataValidationError: If the blocks do not match the specimens or no
            block holds more than one group, leaving nothing to permute
    """
    if blocks is None:
        return None
    blocks = list(blocks)
    if len(blocks) != len(codes):
        raise DataValidationError(f"{len(blocks)} block labels for {len(codes)} specimens")
    if any(b is None for b in blocks):
        raise DataValidationError("every specimen needs a block label when blocks are given")
    members: dict = {}
    for index, block in enumerate(blocks):
        members.setdefault(block, []).append(index)
    ordered = sorted(members.items(), key=lambda item: str(item[0]))
    sets = [np.array(idx, dtype=np.int64) for _, idx in ordered]
    if not any(len(np.unique(codes[idx])) > 1 for idx in sets):
        raise DataValidationError(
            "blocks are incompatible with groups: every block holds a single group, "
            "so within-block permutations cannot change the labelling"
        )
    return sets


def permuted_codes(
    codes: np.ndarray,
    n: int,
    rng: np.random.Generator,
    blocks: Optional[list[np.ndarray]] = None,
) -> np.ndarray:
    """n label permutations (rows), free or within blocks."""
    out = np.empty((n, codes.size), dtype=codes.dtype)
    for row in range(n):
        if blocks is None:
            out[row] = rng.permutation(codes)
        else:
            labels = codes.copy()
            for idx in blocks:
                labels[idx] = rng.permutation(codes[idx])
            out[row] = labels
    return out


def permutation_p_value(
    statistic: Callable[[np.ndarray], np.ndarray],
    codes: np.ndarray,
    n_perm: int,
    seed: SeedLike,
    blocks: Optional[list[np.ndarray]] = None,
    threads: Optional[int] = None,
) -> tuple[float, float]:
    """
    Observed statistic and add-one permutation p-value.

    Permutations are drawn in batches of PERMUTATION_BATCH, each from its
    own spawned stream, so the p-value does not depend on the worker count.
    ``statistic`` maps a (rows x N) label array to one value per row.
    Permuted values within TIE_TOL (relative) of the observed one count as
    ties.
    """
    if not isinstance(n_perm, (int, np.integer)) or n_perm < 1:
        raise ValueError(f"n_perm must be a positive integer, got {n_perm!r}")
    observed = float(statistic(codes[None, :])[0])
    sizes = [PERMUTATION_BATCH] * (n_perm // PERMUTATION_BATCH)
    if n_perm % PERMUTATION_BATCH:
        sizes.append(n_perm % PERMUTATION_BATCH)
    streams = spawn(seed, len(sizes))

    def batch(index: int) -> int:
        labels = permuted_codes(codes, sizes[index], make_rng(streams[index]), blocks)
        values = statistic(labels)
        if np.isinf(observed):
            return int(np.sum(values >= observed))
        return int(np.sum(values >= observed - TIE_TOL * max(1.0, abs(observed))))

    exceed = sum(ordered_map(batch, range(len(sizes)), threads))
    return observed, (1.0 + exceed) / (n_perm + 1.0)


class PermutationTest(ABC):
    """
    Abstract base class for all permutation test implementations.

    All permutation test implementations must inherit from this class
    and implement the test() method.
    """

    @abstractmethod
    def test(
        self, d: DistanceMatrix, groups: Sequence, blocks: Optional[Sequence] = None
    ) -> PermTestResult:
        """
        Test whether specimens group by label.

        Args:
            d: Distance matrix over the specimens
            groups: Group label per specimen, in matrix order
            blocks: Optional block label per specimen; labels are only
                permuted within blocks

        Returns:
            PermTestResult: Observed statistic and permutation p-value
        """
        pass
