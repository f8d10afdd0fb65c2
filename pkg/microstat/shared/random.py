"""
Seeded random streams.

Every stochastic routine takes an integer seed and derives a
``numpy.random.Generator`` backed by PCG64 from a ``SeedSequence``. Independent
work units (taxa, cells, chains, replicates) get spawned child sequences in
canonical order, so results do not depend on scheduling or worker count.
"""

from typing import Union

import numpy as np

SeedLike = Union[int, np.random.SeedSequence]


def seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    """
    Build a SeedSequence from an integer seed (or pass one through).

    Raises:
        TypeError: If seed is neither an int nor a SeedSequence
        ValueError: If seed is negative
    """
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return np.random.SeedSequence(int(seed))


def make_rng(seed: SeedLike) -> np.random.Generator:
    """Create a PCG64 generator for the given seed."""
    return np.random.Generator(np.random.PCG64(seed_sequence(seed)))


def spawn(seed: SeedLike, n: int) -> list[np.random.SeedSequence]:
    """Spawn n independent child sequences in canonical order."""
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    return seed_sequence(seed).spawn(n)


def spawn_rngs(seed: SeedLike, n: int) -> list[np.random.Generator]:
    """Spawn n independent generators in canonical order."""
    return [make_rng(child) for child in spawn(seed, n)]
