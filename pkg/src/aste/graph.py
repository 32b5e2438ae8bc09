"""Dependency-parse adjacency matrices for the graph-convolution encoder.

Parses are ingested, never computed: a sentence's parse arrives as a list
of 1-based head indices (0 for the root), one per token, and is turned into
an undirected 0/1 adjacency matrix.  Self-loops are added and the matrix is
symmetrically degree-normalized before use, keeping propagation scale-stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class DependencyGraph:
    """Undirected token graph plus its normalized propagation matrix."""

    size: int
    edges: frozenset[tuple[int, int]]
    adjacency: np.ndarray = field(compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.adjacency.shape != (self.size, self.size):
            raise ValueError(
                f"adjacency shape {self.adjacency.shape} does not match size {self.size}"
            )


def build_adjacency(edges: Iterable[tuple[int, int]], length: int) -> DependencyGraph:
    """Build ``D^-1/2 (A + I) D^-1/2`` from an undirected edge list.

    ``A`` is the symmetric 0/1 matrix with ones at every edge in both
    directions; degrees are taken after self-loop addition, so every row
    of ``A + I`` sums to at least one and the result is symmetric with
    entries in [0, 1].
    """
    canonical = set()
    for i, j in edges:
        if not (0 <= i < length and 0 <= j < length):
            raise IndexError(f"edge ({i}, {j}) outside sentence of length {length}")
        if i == j:
            continue
        canonical.add((min(i, j), max(i, j)))

    raw = np.zeros((length, length))
    for i, j in canonical:
        raw[i, j] = 1.0
        raw[j, i] = 1.0
    looped = raw + np.eye(length)
    inv_sqrt_degree = 1.0 / np.sqrt(looped.sum(axis=1))
    normalized = looped * inv_sqrt_degree[:, None] * inv_sqrt_degree[None, :]
    return DependencyGraph(size=length, edges=frozenset(canonical), adjacency=normalized)


def heads_to_edges(heads: Sequence[int]) -> list[tuple[int, int]]:
    """Convert 1-based head indices (0 = root) into 0-based token edges."""
    edges = []
    for i, head in enumerate(heads):
        if head < 0 or head > len(heads):
            raise IndexError(f"head index {head} outside sentence of length {len(heads)}")
        if head == 0:
            continue
        edges.append((i, head - 1))
    return edges


def edgeless(length: int) -> DependencyGraph:
    """Graph with self-loops only; its normalized matrix is the identity."""
    return build_adjacency([], length)
