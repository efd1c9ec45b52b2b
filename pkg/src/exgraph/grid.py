"""Implicit Freudenthal-tessellated uniform grid.

Vertices are addressed by a linear index with axis 0 fastest-varying.  The
edge set is never stored: two vertices are adjacent iff their coordinate
difference is a non-zero vector with entries all in {0, 1} or all in {0, -1}.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

MAX_INDEX = np.iinfo(np.int64).max


@dataclass(frozen=True)
class GridDomain:
    """Extents of an n-dimensional vertex grid, axis 0 fastest."""

    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise ValueError("a grid needs at least one axis")
        if any(d < 1 for d in dims):
            raise ValueError(f"grid extents must be >= 1, got {dims}")
        total = 1
        for d in dims:
            total *= d
        if total > MAX_INDEX:
            raise ValueError(f"grid of {total} vertices exceeds 64-bit indexing")
        object.__setattr__(self, "dims", dims)

    @property
    def n(self) -> int:
        return len(self.dims)

    @cached_property
    def size(self) -> int:
        total = 1
        for d in self.dims:
            total *= d
        return total

    @cached_property
    def strides(self) -> tuple[int, ...]:
        out, acc = [], 1
        for d in self.dims:
            out.append(acc)
            acc *= d
        return tuple(out)

    @property
    def slab_size(self) -> int:
        """Vertices in one slab orthogonal to the last axis."""
        return self.size // self.dims[-1]

    def linearize(self, coords: Sequence[int]) -> int:
        if len(coords) != self.n:
            raise ValueError(f"expected {self.n} coordinates, got {len(coords)}")
        idx = 0
        for c, d, s in zip(coords, self.dims, self.strides):
            if not 0 <= c < d:
                raise IndexError(f"coordinate {tuple(coords)} outside grid {self.dims}")
            idx += int(c) * s
        return idx

    def delinearize(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.size:
            raise IndexError(f"vertex index {index} outside [0, {self.size})")
        coords = []
        for d in self.dims:
            index, c = divmod(index, d)
            coords.append(c)
        return tuple(coords)

    def contains(self, coords: Sequence[int]) -> bool:
        return all(0 <= c < d for c, d in zip(coords, self.dims))

    @property
    def dims_array(self) -> np.ndarray:
        return np.asarray(self.dims, dtype=np.int64)


def grid_adjacency(p: Sequence[int], q: Sequence[int]) -> bool:
    """True iff p and q share an edge of the tessellated grid."""
    if len(p) != len(q):
        raise ValueError(f"dimension mismatch: {len(p)} vs {len(q)}")
    diffs = {int(a) - int(b) for a, b in zip(p, q)}
    if diffs <= {0}:
        return False
    return diffs <= {0, 1} or diffs <= {0, -1}


@lru_cache(maxsize=None)
def _offset_table(n: int) -> tuple[np.ndarray, np.ndarray]:
    offsets = [
        d
        for d in itertools.product((-1, 0, 1), repeat=n)
        if any(d) and (min(d) >= 0 or max(d) <= 0)
    ]
    offs = np.asarray(offsets, dtype=np.int64).reshape(len(offsets), n)
    pairs = [
        (a, b)
        for a, b in itertools.combinations(range(len(offsets)), 2)
        if grid_adjacency(offsets[a], offsets[b])
    ]
    edges = np.asarray(pairs, dtype=np.int64).reshape(len(pairs), 2)
    offs.setflags(write=False)
    edges.setflags(write=False)
    return offs, edges


def neighbor_offsets(n: int) -> np.ndarray:
    """The 2*(2**n - 1) coordinate offsets of an interior link, shape (K, n)."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    return _offset_table(n)[0]


def link_edge_table(n: int) -> np.ndarray:
    """Pairs of rows of ``neighbor_offsets(n)`` joined by a grid edge."""
    return _offset_table(n)[1]


def linear_deltas(domain: GridDomain) -> np.ndarray:
    """Linear-index displacement of each neighbor offset."""
    return neighbor_offsets(domain.n) @ np.asarray(domain.strides, dtype=np.int64)


def link_vertices(v: int, domain: GridDomain) -> list[int]:
    """Link of vertex ``v``, truncated at the domain boundary."""
    p = np.asarray(domain.delinearize(v), dtype=np.int64)
    q = neighbor_offsets(domain.n) + p
    inside = np.all((q >= 0) & (q < domain.dims_array), axis=1)
    return [int(v + d) for d in linear_deltas(domain)[inside]]


def link_edges(link: Sequence[int], domain: GridDomain) -> list[tuple[int, int]]:
    """All grid edges between pairs of vertices of ``link``."""
    coords = [domain.delinearize(u) for u in link]
    return [
        (link[a], link[b])
        for a, b in itertools.combinations(range(len(link)), 2)
        if grid_adjacency(coords[a], coords[b])
    ]


def link_edges_of(v: int, domain: GridDomain) -> list[tuple[int, int]]:
    """Induced link edges of ``v`` read from the precomputed edge table."""
    p = np.asarray(domain.delinearize(v), dtype=np.int64)
    q = neighbor_offsets(domain.n) + p
    inside = np.all((q >= 0) & (q < domain.dims_array), axis=1)
    deltas = linear_deltas(domain)
    return [
        (int(v + deltas[a]), int(v + deltas[b]))
        for a, b in link_edge_table(domain.n)
        if inside[a] and inside[b]
    ]
