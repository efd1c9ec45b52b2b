"""Gradient path tracing from (n-1)-saddles to maxima."""

from __future__ import annotations

from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Collection, Sequence

import numba
import numpy as np

from .classify import Classification, CriticalIndex, Criticality

DONE = 0
PARKED = 1
CYCLE = 2
STUCK = 3

_MAXIMUM = int(Criticality.MAXIMUM)


class TraceError(RuntimeError):
    """A gradient path violated the strict-ascent invariant."""


@dataclass(frozen=True)
class GradientPath:
    saddle: int
    first: int
    maximum: int
    vertices: tuple[int, ...] | None = None


@numba.njit(nogil=True, cache=True)
def _walk(ascent, crit, starts, limit, cap, lengths, lasts, status):
    for i in range(starts.shape[0]):
        u = starts[i]
        count = 0
        st = DONE
        while True:
            if u >= limit:
                st = PARKED
                break
            count += 1
            if crit[u] == _MAXIMUM:
                break
            if count > cap:
                st = CYCLE
                break
            nxt = ascent[u]
            if nxt < 0:
                st = STUCK
                break
            u = nxt
        lengths[i] = count
        lasts[i] = u
        status[i] = st


@numba.njit(nogil=True, cache=True)
def _fill(ascent, starts, lengths, offsets, buf):
    for i in range(starts.shape[0]):
        u = starts[i]
        o = offsets[i]
        for j in range(lengths[i]):
            buf[o + j] = u
            u = ascent[u]


@dataclass
class Advance:
    """Outcome of walking a batch of paths up to a watermark.

    ``lasts`` holds the reached maximum for finished paths and the first
    unvisited vertex (at or beyond the watermark) for parked ones.
    """

    status: np.ndarray
    lasts: np.ndarray
    lengths: np.ndarray
    segments: list[np.ndarray] | None

    @property
    def visits(self) -> int:
        return int(self.lengths.sum())


def _advance_chunk(ascent, crit, starts, limit, geometry):
    k = starts.size
    lengths = np.zeros(k, dtype=np.int64)
    lasts = np.zeros(k, dtype=np.int64)
    status = np.zeros(k, dtype=np.int8)
    _walk(ascent, crit, starts, limit, ascent.size, lengths, lasts, status)
    segments = None
    if geometry:
        offsets = np.zeros(k + 1, dtype=np.int64)
        np.cumsum(lengths, out=offsets[1:])
        buf = np.empty(offsets[-1], dtype=np.int64)
        _fill(ascent, starts, lengths, offsets, buf)
        segments = np.split(buf, offsets[1:-1])
    return status, lasts, lengths, segments


def advance(
    cls: Classification,
    starts: np.ndarray,
    limit: int,
    geometry: bool = True,
    executor: Executor | None = None,
    workers: int = 1,
) -> Advance:
    """Follow ascent from each start until a maximum or index ``limit``.

    Every vertex below ``limit`` must already be classified.
    """
    starts = np.ascontiguousarray(starts, dtype=np.int64)
    if executor is None or workers <= 1 or starts.size < 2 * workers:
        parts = [_advance_chunk(cls.ascent, cls.criticality, starts, limit, geometry)]
    else:
        bounds = np.linspace(0, starts.size, workers * 4 + 1).astype(np.int64)
        futures = [
            executor.submit(_advance_chunk, cls.ascent, cls.criticality, starts[a:b], limit, geometry)
            for a, b in zip(bounds[:-1], bounds[1:])
            if b > a
        ]
        parts = [f.result() for f in futures]
    if not parts:
        parts = [_advance_chunk(cls.ascent, cls.criticality, starts, limit, geometry)]
    status = np.concatenate([p[0] for p in parts])
    bad = np.flatnonzero(status >= CYCLE)
    if bad.size:
        i = int(bad[0])
        kind = "revisits a vertex" if status[i] == CYCLE else "reaches a vertex with no ascent"
        raise TraceError(f"path starting at vertex {int(starts[i])} {kind}")
    segs = [s for p in parts for s in p[3]] if geometry else None
    return Advance(
        status,
        np.concatenate([p[1] for p in parts]),
        np.concatenate([p[2] for p in parts]),
        segs,
    )


def trace_gradient_paths(
    s: int,
    reps: Sequence[int],
    cls: Classification,
    maxima: Collection[int] | None = None,
    geometry: bool = True,
) -> list[GradientPath]:
    """One steepest-ascent path per upper-link representative of saddle ``s``."""
    is_max = (lambda u: u in maxima) if maxima is not None else (
        lambda u: cls.criticality[u] == Criticality.MAXIMUM
    )
    paths = []
    for first in reps:
        u = int(first)
        verts = [s]
        seen = {s}
        while True:
            if u in seen:
                raise TraceError(f"path from saddle {s} revisits vertex {u}")
            seen.add(u)
            verts.append(u)
            if is_max(u):
                break
            nxt = int(cls.ascent[u])
            if nxt < 0:
                raise TraceError(f"path from saddle {s} reaches vertex {u} with no ascent")
            u = nxt
        paths.append(GradientPath(s, int(first), u, tuple(verts) if geometry else None))
    return paths


def trace_all(
    index: CriticalIndex,
    cls: Classification,
    geometry: bool = True,
    executor: Executor | None = None,
    workers: int = 1,
) -> list[GradientPath]:
    """Arcs of every saddle, ordered by (saddle, representative)."""
    counts = np.array([len(r) for r in index.reps], dtype=np.int64)
    saddles = np.repeat(index.saddles, counts)
    firsts = np.concatenate(index.reps) if index.reps else np.zeros(0, dtype=np.int64)
    adv = advance(cls, firsts, cls.ascent.size, geometry, executor, workers)
    paths = []
    for i in range(firsts.size):
        s, first, m = int(saddles[i]), int(firsts[i]), int(adv.lasts[i])
        verts = None
        if geometry:
            verts = (s, *adv.segments[i].tolist())
        paths.append(GradientPath(s, first, m, verts))
    return paths
