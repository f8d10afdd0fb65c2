"""
Threshold networks on a distance matrix.
"""

from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from microstat.infrastructure.ordination.base import DistanceMatrix


@dataclass(frozen=True)
class ThresholdNetwork:
    """
    Undirected graph joining specimens whose distance is at most max_d.

    ``edges`` holds (id_j, id_k, distance) with j < k in matrix order;
    ``components`` lists connected components ordered by their first member.
    """

    ids: tuple[str, ...]
    max_d: float
    edges: tuple[tuple[str, str, float], ...]
    components: tuple[tuple[str, ...], ...]

    def edges_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.edges, columns=["source", "target", "distance"])

    def components_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {"specimen_id": member, "component": number + 1}
                for number, members in enumerate(self.components)
                for member in members
            ]
        )


def threshold_network(d: DistanceMatrix, max_d: float) -> ThresholdNetwork:
    """
    Edges {(j, k): d_jk <= max_d, j < k} and the connected components.

    Raises:
        ValueError: If max_d is outside (0, 1]
    """
    if not isinstance(d, DistanceMatrix):
        raise TypeError(f"Expected DistanceMatrix, got {type(d).__name__}")
    if not 0.0 < max_d <= 1.0:
        raise ValueError(f"max_d must lie in (0, 1], got {max_d}")

    j, k = np.triu_indices(d.n, k=1)
    keep = d.d[j, k] <= max_d
    j, k = j[keep], k[keep]
    edges = tuple((d.ids[a], d.ids[b], float(d.d[a, b])) for a, b in zip(j, k))

    adjacency = coo_matrix((np.ones(j.size), (j, k)), shape=(d.n, d.n))
    _, labels = connected_components(adjacency, directed=False)
    first_seen: dict[int, list[str]] = {}
    for index, label in enumerate(labels):
        first_seen.setdefault(int(label), []).append(d.ids[index])
    components = tuple(tuple(members) for members in first_seen.values())
    return ThresholdNetwork(d.ids, float(max_d), edges, components)
