"""
Rooted phylogenetic tree with branch lengths.
"""

import math
import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from microstat.shared.errors import DataValidationError

_NEEDS_QUOTES = re.compile(r"[\s()\[\]',:;]")


@dataclass(frozen=True, eq=False)
class PhyloTree:
    """
    Rooted tree stored as parallel node arrays.

    Node i has parent ``parents[i]`` (-1 for the root), the length of the
    branch leading to it ``branch_lengths[i]`` and an optional label. Leaf
    labels are matched against taxon identifiers.

    Args:
        parents: Parent index per node, -1 for the single root
        branch_lengths: Non-negative finite branch length per node
        labels: Optional label per node

    Raises:
        DataValidationError: If there is not exactly one root, the parent
            links contain a cycle, or a branch length is negative or non-finite
    """

    parents: tuple[int, ...]
    branch_lengths: tuple[float, ...]
    labels: tuple[Optional[str], ...]

    def __init__(
        self,
        parents: Sequence[int],
        branch_lengths: Sequence[float],
        labels: Sequence[Optional[str]],
    ):
        parents_t = tuple(int(p) for p in parents)
        lengths_t = tuple(float(b) for b in branch_lengths)
        labels_t = tuple(None if lab is None else str(lab) for lab in labels)
        n = len(parents_t)

        if n == 0:
            raise DataValidationError("tree has no nodes")
        if len(lengths_t) != n or len(labels_t) != n:
            raise DataValidationError("parents, branch_lengths and labels differ in length")

        roots = [i for i, p in enumerate(parents_t) if p == -1]
        if len(roots) != 1:
            raise DataValidationError(f"tree must have a single root, found {len(roots)}")
        for i, p in enumerate(parents_t):
            if p < -1 or p >= n or p == i:
                raise DataValidationError(f"node {i} has invalid parent {p}")
        for i, length in enumerate(lengths_t):
            if not math.isfinite(length) or length < 0:
                raise DataValidationError(
                    f"branch length of node {labels_t[i] or i} must be finite and >= 0, "
                    f"got {length}"
                )

        object.__setattr__(self, "parents", parents_t)
        object.__setattr__(self, "branch_lengths", lengths_t)
        object.__setattr__(self, "labels", labels_t)

        # Acyclicity: a postorder traversal from the root must reach every node
        if len(self.postorder()) != n:
            raise DataValidationError("tree parent links contain a cycle or unreachable nodes")

    # ----------------------------------------------------------------- basics

    @property
    def n_nodes(self) -> int:
        return len(self.parents)

    @property
    def root(self) -> int:
        return self.parents.index(-1)

    def children(self) -> list[list[int]]:
        """Children of every node, in node order."""
        kids: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for i, p in enumerate(self.parents):
            if p >= 0:
                kids[p].append(i)
        return kids

    def postorder(self) -> list[int]:
        """Node indices with every child before its parent."""
        kids = self.children()
        order: list[int] = []
        stack = [(self.root, False)]
        visited = set()
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if node in visited:
                break
            visited.add(node)
            stack.append((node, True))
            for child in reversed(kids[node]):
                stack.append((child, False))
        return order

    def leaves(self) -> list[int]:
        """Leaf node indices, in node order."""
        has_child = np.zeros(self.n_nodes, dtype=bool)
        for p in self.parents:
            if p >= 0:
                has_child[p] = True
        return [i for i in range(self.n_nodes) if not has_child[i]]

    def leaf_labels(self) -> list[str]:
        return [self.labels[i] for i in self.leaves() if self.labels[i] is not None]

    def leaf_index(self) -> dict[str, int]:
        """Map leaf label -> node index (first occurrence wins)."""
        index: dict[str, int] = {}
        for i in self.leaves():
            label = self.labels[i]
            if label is not None and label not in index:
                index[label] = i
        return index

    def depth(self, node: int) -> float:
        """Sum of branch lengths from the root down to node."""
        total = 0.0
        while self.parents[node] != -1:
            total += self.branch_lengths[node]
            node = self.parents[node]
        return total

    def path_length(self, label_a: str, label_b: str) -> float:
        """Patristic distance between two labelled leaves."""
        index = self.leaf_index()
        for label in (label_a, label_b):
            if label not in index:
                raise KeyError(f"leaf '{label}' not in tree")
        a, b = index[label_a], index[label_b]
        ancestors_a = {}
        node, dist = a, 0.0
        while True:
            ancestors_a[node] = dist
            if self.parents[node] == -1:
                break
            dist += self.branch_lengths[node]
            node = self.parents[node]
        node, dist = b, 0.0
        while node not in ancestors_a:
            dist += self.branch_lengths[node]
            node = self.parents[node]
        return dist + ancestors_a[node]

    # ------------------------------------------------------------ restructure

    def prune(self, keep: Iterable[str]) -> "PhyloTree":
        """
        Keep only leaves whose label is in ``keep``.

        Internal nodes left without kept descendants are removed and unary
        nodes are suppressed (their branch merged into the child), so path
        lengths between surviving leaves are unchanged.

        Raises:
            DataValidationError: If no leaf survives
        """
        keep_set = set(keep)
        kids = self.children()
        n = self.n_nodes
        alive = np.zeros(n, dtype=bool)
        for node in self.postorder():
            if kids[node]:
                alive[node] = any(alive[c] for c in kids[node])
            else:
                alive[node] = self.labels[node] in keep_set
        if not alive[self.root]:
            raise DataValidationError("pruning removes every leaf of the tree")

        parents = list(self.parents)
        lengths = list(self.branch_lengths)
        live_kids = [[c for c in kids[i] if alive[c]] for i in range(n)]

        # Suppress unary internal nodes, walking from the leaves up
        for node in self.postorder():
            if not alive[node] or len(live_kids[node]) != 1:
                continue
            (child,) = live_kids[node]
            if parents[node] == -1:
                parents[child] = -1
                lengths[child] = lengths[node]
            else:
                lengths[child] += lengths[node]
                parents[child] = parents[node]
                siblings = live_kids[parents[node]]
                siblings[siblings.index(node)] = child
            alive[node] = False

        return _compact(parents, lengths, list(self.labels), alive)

    def reroot(self, node: int, distance: float) -> "PhyloTree":
        """
        Place a new root on the branch above ``node``.

        Args:
            node: Node whose parental branch receives the root
            distance: Distance of the new root from ``node`` along the branch

        Raises:
            ValueError: If node is the root or distance is outside the branch
        """
        if self.parents[node] == -1:
            raise ValueError("cannot reroot on the branch above the root")
        length = self.branch_lengths[node]
        if not 0 <= distance <= length:
            raise ValueError(f"distance must lie in [0, {length}], got {distance}")

        n = self.n_nodes
        parents = list(self.parents) + [-1]
        lengths = list(self.branch_lengths) + [0.0]
        labels = list(self.labels) + [None]
        new_root = n

        # Reverse the parent links on the path from node's parent up to the old root
        path = [self.parents[node]]
        while self.parents[path[-1]] != -1:
            path.append(self.parents[path[-1]])
        parents[node] = new_root
        lengths[node] = distance
        parents[path[0]] = new_root
        lengths[path[0]] = length - distance
        for lower, upper in zip(path[:-1], path[1:]):
            parents[upper] = lower
            lengths[upper] = self.branch_lengths[lower]

        alive = np.ones(n + 1, dtype=bool)
        old_root = path[-1]
        old_root_kids = [i for i, p in enumerate(parents) if p == old_root]
        if len(old_root_kids) == 1 and old_root != path[0]:
            (child,) = old_root_kids
            parents[child] = parents[old_root]
            lengths[child] += lengths[old_root]
            alive[old_root] = False
        elif len(old_root_kids) == 1:
            (child,) = old_root_kids
            parents[child] = new_root
            lengths[child] += lengths[old_root]
            alive[old_root] = False

        return _compact(parents, lengths, labels, alive)

    # ------------------------------------------------------------------ output

    def to_newick(self) -> str:
        """Serialise to Newick with full-precision branch lengths."""
        kids = self.children()
        pieces: dict[int, str] = {}
        for node in self.postorder():
            text = ""
            if kids[node]:
                text = "(" + ",".join(pieces.pop(c) for c in kids[node]) + ")"
            label = self.labels[node]
            if label is not None:
                text += _quote(label)
            text += f":{self.branch_lengths[node]!r}"
            pieces[node] = text
        return pieces[self.root] + ";"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PhyloTree):
            return NotImplemented
        return (
            self.parents == other.parents
            and self.branch_lengths == other.branch_lengths
            and self.labels == other.labels
        )

    def __repr__(self) -> str:
        return f"PhyloTree(nodes={self.n_nodes}, leaves={len(self.leaves())})"


def _quote(label: str) -> str:
    if _NEEDS_QUOTES.search(label):
        return "'" + label.replace("'", "''") + "'"
    return label


def _compact(
    parents: list[int],
    lengths: list[float],
    labels: list[Optional[str]],
    alive: np.ndarray,
) -> PhyloTree:
    """Drop dead nodes and renumber the survivors in their original order."""
    new_index = {old: new for new, old in enumerate(i for i in range(len(parents)) if alive[i])}
    return PhyloTree(
        [new_index[parents[i]] if parents[i] != -1 else -1 for i in new_index],
        [lengths[i] for i in new_index],
        [labels[i] for i in new_index],
    )
