"""Critical point classification by union-find over link components.

Every vertex is classified independently from its link: the link vertices are
split into an upper and a lower side under the perturbed order, induced link
edges with both ends on the same side are united, and the number of upper and
lower components decides the vertex type.  The same kernel also records the
steepest-ascent neighbor (the greatest vertex of the upper link).
"""

from __future__ import annotations

from concurrent.futures import Executor
from dataclasses import dataclass
from enum import IntEnum

import numba
import numpy as np

from .field import ScalarField
from .grid import GridDomain, link_edge_table, linear_deltas, neighbor_offsets


class Criticality(IntEnum):
    REGULAR = 0
    MAXIMUM = 1
    MINIMUM = 2
    SADDLE_1 = 3
    SADDLE_N_MINUS_1 = 4
    OTHER = 5


UNCLASSIFIED = -1
NO_ASCENT = -1


@numba.njit(nogil=True, cache=True)
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@numba.njit(nogil=True, cache=True)
def _link_components(values, base, dims, offsets, deltas, edges, v, coords, side, parent, size):
    """Fill ``side`` and the union-find forest for vertex v.

    Returns (beta_plus, beta_minus, ascent, edge_tests).
    """
    n = dims.shape[0]
    K = offsets.shape[0]
    rem = v
    for a in range(n):
        coords[a] = rem % dims[a]
        rem //= dims[a]
    fv = values[v - base]
    best = -1
    fbest = fv
    for k in range(K):
        parent[k] = k
        size[k] = 1
        inside = True
        for a in range(n):
            c = coords[a] + offsets[k, a]
            if c < 0 or c >= dims[a]:
                inside = False
                break
        if not inside:
            side[k] = 0
            continue
        u = v + deltas[k]
        fu = values[u - base]
        if fu > fv or (fu == fv and u > v):
            side[k] = 1
            if best < 0 or fu > fbest or (fu == fbest and u > best):
                best = u
                fbest = fu
        else:
            side[k] = -1
    tests = 0
    for e in range(edges.shape[0]):
        a = edges[e, 0]
        b = edges[e, 1]
        if side[a] == 0 or side[b] == 0:
            continue
        tests += 1
        if side[a] != side[b]:
            continue
        ra = _find(parent, a)
        rb = _find(parent, b)
        if ra == rb:
            continue
        if size[ra] < size[rb]:
            ra, rb = rb, ra
        parent[rb] = ra
        size[ra] += size[rb]
    up = 0
    down = 0
    for k in range(K):
        if side[k] != 0 and parent[k] == k:
            if side[k] > 0:
                up += 1
            else:
                down += 1
    return up, down, best, tests


@numba.njit(nogil=True, cache=True)
def _classify_range(values, base, dims, offsets, deltas, edges, lo, hi,
                    crit, beta_plus, beta_minus, ascent, tests, out_base):
    n = dims.shape[0]
    K = offsets.shape[0]
    coords = np.empty(n, np.int64)
    side = np.empty(K, np.int8)
    parent = np.empty(K, np.int64)
    size = np.empty(K, np.int64)
    record_tests = tests.shape[0] > 0
    for v in range(lo, hi):
        up, down, best, t = _link_components(
            values, base, dims, offsets, deltas, edges, v, coords, side, parent, size
        )
        i = v - out_base
        beta_plus[i] = up
        beta_minus[i] = down
        ascent[i] = best
        if record_tests:
            tests[i] = t
        if up == 0 and down >= 1:
            crit[i] = 1
        elif down == 0 and up >= 1:
            crit[i] = 2
        elif up >= 2:
            crit[i] = 4
        elif down >= 2:
            crit[i] = 3
        elif up == 1 and down == 1:
            crit[i] = 0
        else:
            crit[i] = 5


@numba.njit(nogil=True, cache=True)
def _upper_reps(values, base, dims, offsets, deltas, edges, saddles, out, counts):
    """Greatest vertex of each upper-link component, per saddle, by index."""
    n = dims.shape[0]
    K = offsets.shape[0]
    coords = np.empty(n, np.int64)
    side = np.empty(K, np.int8)
    parent = np.empty(K, np.int64)
    size = np.empty(K, np.int64)
    top = np.empty(K, np.int64)
    for j in range(saddles.shape[0]):
        v = saddles[j]
        _link_components(values, base, dims, offsets, deltas, edges, v, coords, side, parent, size)
        for k in range(K):
            top[k] = -1
        for k in range(K):
            if side[k] <= 0:
                continue
            r = _find(parent, k)
            u = v + deltas[k]
            t = top[r]
            if t < 0:
                top[r] = u
            else:
                fu = values[u - base]
                ft = values[t - base]
                if fu > ft or (fu == ft and u > t):
                    top[r] = u
        c = 0
        for k in range(K):
            if top[k] >= 0:
                out[j, c] = top[k]
                c += 1
        counts[j] = c
        out[j, :c].sort()


@dataclass(frozen=True)
class VertexClassification:
    criticality: Criticality
    beta_plus: int
    beta_minus: int
    ascent: int | None

    @property
    def multi_class(self) -> bool:
        """Both saddle rows of the classification table apply."""
        return self.beta_plus >= 2 and self.beta_minus >= 2


@dataclass
class Classification:
    """Per-vertex classification arrays over a whole domain."""

    criticality: np.ndarray
    beta_plus: np.ndarray
    beta_minus: np.ndarray
    ascent: np.ndarray
    edge_tests: np.ndarray | None = None

    @classmethod
    def empty(cls, size: int, record_tests: bool = False) -> "Classification":
        return cls(
            criticality=np.full(size, UNCLASSIFIED, dtype=np.int8),
            beta_plus=np.zeros(size, dtype=np.int16),
            beta_minus=np.zeros(size, dtype=np.int16),
            ascent=np.full(size, NO_ASCENT, dtype=np.int64),
            edge_tests=np.zeros(size if record_tests else 0, dtype=np.int32),
        )

    def __getitem__(self, v: int) -> VertexClassification:
        c = int(self.criticality[v])
        if c == UNCLASSIFIED:
            raise KeyError(f"vertex {v} has not been classified")
        a = int(self.ascent[v])
        return VertexClassification(
            Criticality(c), int(self.beta_plus[v]), int(self.beta_minus[v]),
            None if a == NO_ASCENT else a,
        )

    def counts(self) -> dict[str, int]:
        hist = np.bincount(self.criticality[self.criticality >= 0], minlength=len(Criticality))
        out = {c.name.lower(): int(hist[c]) for c in Criticality}
        out["critical"] = int(hist.sum() - hist[Criticality.REGULAR])
        return out


@dataclass
class CriticalIndex:
    """Maxima and (n-1)-saddles with their upper-link representatives."""

    maxima: np.ndarray
    saddles: np.ndarray
    reps: list[np.ndarray]

    def rep_count(self) -> int:
        return sum(len(r) for r in self.reps)


class _Tables:
    def __init__(self, domain: GridDomain) -> None:
        self.dims = domain.dims_array
        self.offsets = np.ascontiguousarray(neighbor_offsets(domain.n))
        self.deltas = linear_deltas(domain)
        self.edges = np.ascontiguousarray(link_edge_table(domain.n))


def _tables(domain: GridDomain) -> _Tables:
    return _Tables(domain)


def _chunks(lo: int, hi: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, hi - lo))
    bounds = np.linspace(lo, hi, parts + 1).astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def classify_range(
    values: np.ndarray,
    base: int,
    domain: GridDomain,
    lo: int,
    hi: int,
    out: Classification,
    executor: Executor | None = None,
    workers: int = 1,
) -> None:
    """Classify vertices ``lo <= v < hi`` into ``out``.

    ``values`` may be a window of the full sample array starting at linear
    index ``base``; it must cover the links of every vertex in range.
    """
    t = _tables(domain)
    args = (values, base, t.dims, t.offsets, t.deltas, t.edges)
    outs = (out.criticality, out.beta_plus, out.beta_minus, out.ascent, out.edge_tests, 0)
    if executor is None or workers <= 1:
        _classify_range(*args, lo, hi, *outs)
        return
    futures = [executor.submit(_classify_range, *args, a, b, *outs) for a, b in _chunks(lo, hi, workers * 4)]
    for f in futures:
        f.result()


def upper_link_reps(values: np.ndarray, base: int, domain: GridDomain, saddles: np.ndarray) -> list[np.ndarray]:
    t = _tables(domain)
    saddles = np.ascontiguousarray(saddles, dtype=np.int64)
    out = np.full((saddles.size, t.offsets.shape[0]), -1, dtype=np.int64)
    counts = np.zeros(saddles.size, dtype=np.int64)
    _upper_reps(values, base, t.dims, t.offsets, t.deltas, t.edges, saddles, out, counts)
    return [out[j, : counts[j]].copy() for j in range(saddles.size)]


def classify_vertex(v: int, field: ScalarField) -> VertexClassification:
    domain = field.domain
    if not 0 <= v < domain.size:
        raise IndexError(f"vertex index {v} outside [0, {domain.size})")
    out = Classification.empty(1)
    t = _tables(domain)
    _classify_range(field.values, 0, t.dims, t.offsets, t.deltas, t.edges, v, v + 1,
                    out.criticality, out.beta_plus, out.beta_minus, out.ascent, out.edge_tests, v)
    return out[0]


def critical_index(field: ScalarField, cls: Classification, lo: int = 0, hi: int | None = None) -> CriticalIndex:
    hi = field.domain.size if hi is None else hi
    crit = cls.criticality[lo:hi]
    maxima = np.flatnonzero(crit == Criticality.MAXIMUM) + lo
    saddles = np.flatnonzero(crit == Criticality.SADDLE_N_MINUS_1) + lo
    reps = upper_link_reps(field.values, 0, field.domain, saddles)
    return CriticalIndex(maxima.astype(np.int64), saddles.astype(np.int64), reps)


def classify_all(
    field: ScalarField,
    region: tuple[int, int] | None = None,
    executor: Executor | None = None,
    workers: int = 1,
    record_tests: bool = False,
) -> tuple[Classification, CriticalIndex]:
    """Classify every vertex of ``region`` (default: the whole domain)."""
    size = field.domain.size
    lo, hi = (0, size) if region is None else region
    if not 0 <= lo <= hi <= size:
        raise ValueError(f"region {region} outside [0, {size}]")
    out = Classification.empty(size, record_tests)
    classify_range(field.values, 0, field.domain, lo, hi, out, executor, workers)
    return out, critical_index(field, out, lo, hi)
