"""Extremum graph container and graph-level simplification.

Node values are stored in the orientation the graph was computed in: for a
minimum graph they are the negated field values, so "higher" always means
"closer to an extremum" and every operation here can assume a maximum graph.
"""

from __future__ import annotations

import heapq
import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

MAXIMUM = "max"
SADDLE = "saddle"


@dataclass(frozen=True)
class Arc:
    saddle: int
    maximum: int
    first: int
    geometry: tuple[int, ...] | None = None

    @property
    def key(self) -> tuple[int, int, int]:
        return self.saddle, self.maximum, self.first


@dataclass(eq=False)
class ExtremumGraph:
    """Bipartite graph of maxima and (n-1)-saddles joined by gradient arcs."""

    dims: tuple[int, ...]
    dtype: str
    kind: str = "max"
    value_range: tuple = (0, 0)
    values: dict[int, object] = field(default_factory=dict)
    maxima: set[int] = field(default_factory=set)
    saddles: set[int] = field(default_factory=set)
    arcs: list[Arc] = field(default_factory=list)
    trail: list[str] = field(default_factory=list)

    @property
    def width(self):
        lo, hi = self.value_range
        return hi - lo

    def order_key(self, v: int) -> tuple:
        return self.values[v], v

    def node_kind(self, v: int) -> str:
        return MAXIMUM if v in self.maxima else SADDLE

    def sorted_arcs(self) -> list[Arc]:
        return sorted(self.arcs, key=lambda a: a.key)

    def arcs_by_saddle(self) -> dict[int, list[Arc]]:
        out: dict[int, list[Arc]] = defaultdict(list)
        for a in self.sorted_arcs():
            out[a.saddle].append(a)
        return out

    @property
    def has_geometry(self) -> bool:
        return bool(self.arcs) and all(a.geometry is not None for a in self.arcs)

    def canonical(self) -> tuple:
        nodes = tuple(
            (v, self.node_kind(v), self.values[v])
            for v in sorted(self.maxima | self.saddles)
        )
        arcs = tuple((a.key, a.geometry) for a in self.sorted_arcs())
        return (self.dims, self.dtype, self.kind, tuple(self.value_range), nodes, arcs, tuple(self.trail))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExtremumGraph):
            return NotImplemented
        return self.canonical() == other.canonical()

    def copy(self, arcs: Iterable[Arc] | None = None) -> "ExtremumGraph":
        return ExtremumGraph(
            self.dims, self.dtype, self.kind, tuple(self.value_range),
            dict(self.values), set(self.maxima), set(self.saddles),
            list(self.arcs if arcs is None else arcs), list(self.trail),
        )

    def validate(self) -> None:
        if self.maxima & self.saddles:
            raise ValueError("a vertex is both a maximum and a saddle")
        with_arcs = set()
        for a in self.arcs:
            if a.saddle not in self.saddles or a.maximum not in self.maxima:
                raise ValueError(f"arc {a.key} does not join a saddle to a maximum")
            with_arcs.add(a.saddle)
        if with_arcs != self.saddles:
            raise ValueError("every saddle needs at least one arc")
        missing = (self.maxima | self.saddles) - self.values.keys()
        if missing:
            raise ValueError(f"nodes without values: {sorted(missing)[:5]}")

    def _prune_values(self) -> None:
        keep = self.maxima | self.saddles
        self.values = {v: x for v, x in self.values.items() if v in keep}


def bundle_arcs(g: ExtremumGraph) -> ExtremumGraph:
    """Keep one saddle, the highest, between every pair of maxima.

    A saddle keeps its arcs to a maximum m only if it is the representative
    of some pair (m, m') it touches; saddles touching a single maximum are
    left alone.  Since the representative of a pair always keeps both arcs,
    connectivity between maxima is unchanged.
    """
    by_saddle = g.arcs_by_saddle()
    maxsets = {s: sorted({a.maximum for a in arcs}) for s, arcs in by_saddle.items()}
    rep: dict[tuple[int, int], int] = {}
    for s, ms in maxsets.items():
        for pair in itertools.combinations(ms, 2):
            cur = rep.get(pair)
            if cur is None or g.order_key(s) > g.order_key(cur):
                rep[pair] = s
    kept = []
    for s, arcs in by_saddle.items():
        ms = maxsets[s]
        if len(ms) > 1:
            keep = {m for pair in itertools.combinations(ms, 2) if rep[pair] == s for m in pair}
        else:
            keep = set(ms)
        kept.extend(a for a in arcs if a.maximum in keep)
    out = g.copy(kept)
    out.saddles = {a.saddle for a in kept}
    out._prune_values()
    out.trail.append("bundle")
    return out


def _join(a: tuple | None, b: tuple | None, c: tuple | None) -> tuple | None:
    """Geometry a ++ reverse(b) ++ c with repeated junction vertices dropped."""
    if a is None or b is None or c is None:
        return None
    out = list(a)
    for part in (b[::-1], c):
        start = 1 if out and part and out[-1] == part[0] else 0
        out.extend(part[start:])
    return tuple(out)


class _Cancellation:
    def __init__(self, g: ExtremumGraph) -> None:
        self.g = g
        self.arcs: dict[int, list[Arc]] = {s: list(a) for s, a in g.arcs_by_saddle().items()}
        self.touching: dict[int, set[int]] = defaultdict(set)
        for s, arcs in self.arcs.items():
            for a in arcs:
                self.touching[a.maximum].add(s)

    def maxima_of(self, s: int) -> list[int]:
        """Distinct adjacent maxima, highest first."""
        return sorted({a.maximum for a in self.arcs[s]}, key=self.g.order_key, reverse=True)

    def cost(self, s: int):
        ms = self.maxima_of(s)
        partner = ms[1] if len(ms) > 1 else ms[0]
        return self.g.values[partner] - self.g.values[s]

    def _remove_saddle(self, s: int) -> list[Arc]:
        arcs = self.arcs.pop(s)
        for a in arcs:
            self.touching[a.maximum].discard(s)
        self.g.saddles.discard(s)
        return arcs

    def cancel(self, s: int) -> None:
        ms = self.maxima_of(s)
        arcs = self._remove_saddle(s)
        if len(ms) == 1:
            return
        survivor, victims = ms[0], ms[1:]
        to_survivor = min((a for a in arcs if a.maximum == survivor), key=lambda a: a.first)
        for m in victims:
            to_m = min((a for a in arcs if a.maximum == m), key=lambda a: a.first)
            for other in sorted(self.touching.pop(m, ())):
                rewired = []
                for a in self.arcs[other]:
                    if a.maximum == m:
                        a = Arc(other, survivor, a.first, _join(a.geometry, to_m.geometry, to_survivor.geometry))
                    rewired.append(a)
                self.arcs[other] = rewired
                self.touching[survivor].add(other)
            self.g.maxima.discard(m)

    def finish(self, trail: str) -> ExtremumGraph:
        g = self.g
        g.arcs = [a for s in sorted(self.arcs) for a in self.arcs[s]]
        g._prune_values()
        g.trail.append(trail)
        return g


def cancel_persistence(g: ExtremumGraph, t: float) -> ExtremumGraph:
    """Cancel saddle-maximum pairs whose persistence is at most ``t`` of the
    field range, lowest first, with lazily refreshed priorities."""
    if not 0 <= t <= 1:
        raise ValueError(f"persistence threshold {t} outside [0, 1]")
    work = _Cancellation(g.copy())
    trail = f"persist:{float(t)!r}"
    if t == 0:
        return work.finish(trail)
    threshold = t * g.width
    heap = [(work.cost(s), s) for s in work.arcs]
    heapq.heapify(heap)
    while heap:
        _, s = heapq.heappop(heap)
        cost = work.cost(s)
        if cost > threshold:
            continue
        if heap and cost > heap[0][0]:
            heapq.heappush(heap, (cost, s))
            continue
        work.cancel(s)
    return work.finish(trail)


def saturated_persistence(g: ExtremumGraph, arc: Arc, f_lo, f_hi):
    sp = min(g.values[arc.maximum], f_hi) - max(g.values[arc.saddle], f_lo)
    return max(sp, 0)


def saturated_simplify(g: ExtremumGraph, p_lo: float, p_hi: float) -> ExtremumGraph:
    """Prune arcs whose persistence, with node values clamped to the band
    [lo + p_lo*range, lo + p_hi*range], is at most p_lo*range."""
    if not 0 <= p_lo < p_hi <= 1:
        raise ValueError(f"need 0 <= p_lo < p_hi <= 1, got {p_lo}, {p_hi}")
    lo, _ = g.value_range
    w = g.width
    f_lo, f_hi = lo + p_lo * w, lo + p_hi * w
    cut = p_lo * w
    kept = [a for a in g.arcs if saturated_persistence(g, a, f_lo, f_hi) > cut]
    count = defaultdict(int)
    for a in kept:
        count[a.saddle] += 1
    kept = [a for a in kept if count[a.saddle] >= 2]
    out = g.copy(kept)
    out.saddles = {a.saddle for a in kept}
    out._prune_values()
    out.trail.append(f"saturate:{float(p_lo)!r},{float(p_hi)!r}")
    return out


def graph_stats(g: ExtremumGraph, baseline: ExtremumGraph | None = None) -> dict:
    stats = {"maxima": len(g.maxima), "saddles": len(g.saddles), "arcs": len(g.arcs)}
    if baseline is not None:
        for k, base in graph_stats(baseline).items():
            stats[f"{k}_fraction"] = stats[k] / base if base else 0.0
    return stats
