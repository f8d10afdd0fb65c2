"""
Power of PERMANOVA on Bray-Curtis distances under strain switching.
"""

from dataclasses import dataclass, replace
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd

from microstat.shared import ordered_map
from microstat.shared.random import spawn
from microstat.infrastructure.models.simulator import SimScenario, simulate
from microstat.infrastructure.ordination.distances import distance
from microstat.infrastructure.transformers.size_factors import scale_by_size_factors
from .permanova import permanova


@dataclass(frozen=True)
class PowerCurve:
    """
    Rejection rate of PERMANOVA at each point of a switching grid.

    Args:
        scenario: Descriptor of the simulated design (SimScenario.to_dict())
        grid: Switching fractions
        power: Rejection rate per grid point
        standard_error: Monte Carlo SE sqrt(p (1 - p) / n_replicates)
        n_replicates: Simulated datasets per grid point
        label: 'switched' or 'unswitched'
        alpha: Test level
    """

    scenario: dict[str, Any]
    grid: tuple[float, ...]
    power: np.ndarray
    standard_error: np.ndarray
    n_replicates: int
    label: str
    alpha: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "curve": self.label,
                "switch_fraction": list(self.grid),
                "power": self.power,
                "se": self.standard_error,
                "n_replicates": self.n_replicates,
                "alpha": self.alpha,
            }
        )


def _replicate_seed(child: np.random.SeedSequence) -> int:
    return int(child.generate_state(1, dtype=np.uint32)[0])


def _rejects(scenario: SimScenario, alpha: float, n_perm: int, perm_seed: int) -> bool:
    dataset = simulate(scenario).biological()
    table = scale_by_size_factors(dataset.counts, dataset.size_factors)
    d = distance(table, "bray_curtis")
    groups = [s.group for s in dataset.samples_in_order()]
    return permanova(d, groups, n_perm, perm_seed, threads=1).p_value <= alpha


def strain_switch_power(
    base: SimScenario,
    switch_fractions: Sequence[float],
    n_replicates: int = 100,
    alpha: float = 0.05,
    seed: int = 0,
    n_perm: int = 199,
    threads: Optional[int] = None,
) -> tuple[PowerCurve, PowerCurve]:
    """
    Matched power curves with and without strain switching.

    At every grid point each replicate simulates the scenario with random
    switching of the scenario's switch pairs at that fraction. The baseline is
    the same scenario switched at fraction zero from the same seed, so both
    datasets share every count draw and the curves agree at f = 0. Specimens
    are scaled by their size factors, compared with Bray-Curtis and tested
    with PERMANOVA; a replicate rejects when p <= alpha.
    Replicate r uses the same simulation and permutation seeds at every grid
    point.

    Args:
        base: Scenario with a group effect and at least one switch pair
        switch_fractions: Switching probabilities in [0, 1]
        n_replicates: Simulated datasets per grid point
        alpha: Test level
        seed: Integer seed
        n_perm: Permutations per PERMANOVA
        threads: Worker cap (replicates run in parallel)

    Returns:
        tuple: (switched PowerCurve, unswitched PowerCurve)

    Raises:
        ValueError: If the scenario has no switch pairs or arguments are out
            of range
    """
    if not isinstance(base, SimScenario):
        raise TypeError(f"base must be a SimScenario, got {type(base).__name__}")
    if not base.switch_pairs:
        raise ValueError("the scenario needs at least one switch pair")
    grid = tuple(float(f) for f in switch_fractions)
    if not grid:
        raise ValueError("switch_fractions must not be empty")
    if any(not 0.0 <= f <= 1.0 for f in grid):
        raise ValueError(f"switch fractions must lie in [0, 1], got {list(grid)}")
    if n_replicates < 1:
        raise ValueError(f"n_replicates must be >= 1, got {n_replicates}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")

    streams = spawn(seed, 2 * n_replicates)
    sim_seeds = [_replicate_seed(s) for s in streams[:n_replicates]]
    perm_seeds = [_replicate_seed(s) for s in streams[n_replicates:]]

    unswitched_base = replace(base, switch_mode="random", switch_fraction=0.0)

    def run_unswitched(r: int) -> bool:
        return _rejects(unswitched_base.with_seed(sim_seeds[r]), alpha, n_perm, perm_seeds[r])

    unswitched = ordered_map(run_unswitched, range(n_replicates), threads)

    cells = [(g, r) for g in range(len(grid)) for r in range(n_replicates)]

    def run(cell: tuple[int, int]) -> bool:
        g, r = cell
        scenario = replace(
            base, switch_mode="random", switch_fraction=grid[g], seed=sim_seeds[r]
        )
        return _rejects(scenario, alpha, n_perm, perm_seeds[r])

    switched = np.array(ordered_map(run, cells, threads), dtype=float)
    switched = switched.reshape(len(grid), n_replicates).mean(axis=1)
    plain = np.full(len(grid), float(np.mean(unswitched)))

    def curve(power: np.ndarray, label: str) -> PowerCurve:
        se = np.sqrt(power * (1.0 - power) / n_replicates)
        return PowerCurve(base.to_dict(), grid, power, se, n_replicates, label, alpha)

    return curve(switched, "switched"), curve(plain, "unswitched")


def power_frame(curves: Sequence[PowerCurve]) -> pd.DataFrame:
    return pd.concat([c.to_frame() for c in curves], ignore_index=True)
