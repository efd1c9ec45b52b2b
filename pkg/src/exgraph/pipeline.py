"""Block-streamed two-stage extremum graph computation.

The vertex array is cut into slabs along the last axis.  A classification
stage processes blocks strictly in order, each reading only its core and one
ghost slab on either side, and publishes a watermark: every vertex below it is
classified.  The tracing stage starts paths from the saddles of each finished
block and walks them until they reach a maximum or step onto a vertex at or
above the watermark, where they are parked as (saddle, first, last) and
resumed once the block holding ``last`` has been classified.
"""

from __future__ import annotations

import bisect
import queue
import threading
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from .classify import Classification, Criticality, classify_range, upper_link_reps
from .field import ScalarField, negate
from .grid import GridDomain
from .simplify import Arc, ExtremumGraph
from .trace import DONE, GradientPath, advance


DEFAULT_BUDGET = 1 << 24


class PipelineError(RuntimeError):
    """An internal ordering invariant of the block pipeline was violated."""


@dataclass(frozen=True)
class Block:
    id: int
    core: range
    ghost_lo: range | None
    ghost_hi: range | None

    @property
    def span(self) -> range:
        lo = self.ghost_lo.start if self.ghost_lo else self.core.start
        hi = self.ghost_hi.stop if self.ghost_hi else self.core.stop
        return range(lo, hi)


def partition(domain: GridDomain, budget: int) -> list[Block]:
    """Split the domain into slab-aligned blocks of at most ``budget``
    vertices each, ghosts included."""
    budget = int(budget)
    slab = domain.slab_size
    nslabs = domain.dims[-1]
    if budget >= domain.size:
        return [Block(0, range(0, domain.size), None, None)]
    if budget < 3 * slab:
        raise ValueError(
            f"block budget {budget} too small: one core slab plus two ghost "
            f"slabs needs at least {3 * slab} vertices"
        )
    per_block = budget // slab - 2
    count = -(-nslabs // per_block)
    base, extra = divmod(nslabs, count)
    blocks, start = [], 0
    for i in range(count):
        stop = start + base + (1 if i < extra else 0)
        core = range(start * slab, stop * slab)
        lo = range((start - 1) * slab, start * slab) if start > 0 else None
        hi = range(stop * slab, (stop + 1) * slab) if stop < nslabs else None
        blocks.append(Block(i, core, lo, hi))
        start = stop
    return blocks


@dataclass
class RunStats:
    block_count: int = 0
    workers: int = 1
    parked_peak: int = 0
    parks: int = 0
    resumes: int = 0
    visits: int = 0
    path_vertices: int = 0
    watermarks: list[int] = dc_field(default_factory=list)
    classify_seconds: float = 0.0
    trace_tail_seconds: float = 0.0
    classify_busy_seconds: float = 0.0
    trace_busy_seconds: float = 0.0
    total_seconds: float = 0.0
    critical_counts: dict[str, int] = dc_field(default_factory=dict)


@dataclass
class PipelineResult:
    graph: ExtremumGraph
    classification: Classification
    paths: list[GradientPath]
    stats: RunStats


def build_graph(
    field: ScalarField,
    cls: Classification,
    paths: list[GradientPath],
    kind: str = "max",
    dtype: str | None = None,
) -> ExtremumGraph:
    maxima = np.flatnonzero(cls.criticality == Criticality.MAXIMUM)
    saddles = np.flatnonzero(cls.criticality == Criticality.SADDLE_N_MINUS_1)
    nodes = np.concatenate([maxima, saddles])
    values = dict(zip(nodes.tolist(), field.values[nodes].tolist()))
    arcs = [Arc(p.saddle, p.maximum, p.first, p.vertices) for p in paths]
    return ExtremumGraph(
        dims=field.domain.dims,
        dtype=dtype or field.dtype,
        kind=kind,
        value_range=field.value_range(),
        values=values,
        maxima=set(maxima.tolist()),
        saddles=set(saddles.tolist()),
        arcs=arcs,
    )


class _Paths:
    """Tracer-side bookkeeping for every path started so far."""

    def __init__(self, geometry: bool) -> None:
        self.geometry = geometry
        self.saddle: list[int] = []
        self.first: list[int] = []
        self.last: list[int] = []
        self.maximum: list[int] = []
        self.segments: list[list[np.ndarray]] = []

    def start(self, s: int, reps: np.ndarray) -> list[int]:
        ids = []
        for r in reps.tolist():
            ids.append(len(self.saddle))
            self.saddle.append(s)
            self.first.append(r)
            self.last.append(r)
            self.maximum.append(-1)
            self.segments.append([np.array([s], dtype=np.int64)] if self.geometry else [])
        return ids

    def finished(self) -> list[GradientPath]:
        order = sorted(range(len(self.saddle)), key=lambda i: (self.saddle[i], self.first[i]))
        out = []
        for i in order:
            verts = tuple(np.concatenate(self.segments[i]).tolist()) if self.geometry else None
            out.append(GradientPath(self.saddle[i], self.first[i], self.maximum[i], verts))
        return out


def run_pipeline(
    field: ScalarField,
    blocks: list[Block],
    workers: int = 1,
    geometry: bool = True,
    kind: str = "max",
    dtype: str | None = None,
) -> PipelineResult:
    """Compute the maximum graph of ``field`` streaming ``blocks`` in order."""
    t0 = time.perf_counter()
    domain = field.domain
    cls = Classification.empty(domain.size)
    stats = RunStats(block_count=len(blocks), workers=workers)
    executor = ThreadPoolExecutor(workers) if workers > 1 else None
    events: queue.Queue = queue.Queue()
    stop = threading.Event()

    def classify_stage() -> None:
        try:
            for b in blocks:
                if stop.is_set():
                    return
                tb = time.perf_counter()
                span = b.span
                window = field.values[span.start : span.stop]
                classify_range(window, span.start, domain, b.core.start, b.core.stop, cls, executor, workers)
                crit = cls.criticality[b.core.start : b.core.stop]
                saddles = np.flatnonzero(crit == Criticality.SADDLE_N_MINUS_1) + b.core.start
                reps = upper_link_reps(window, span.start, domain, saddles)
                stats.classify_busy_seconds += time.perf_counter() - tb
                events.put((b, saddles, reps))
            stats.classify_seconds = time.perf_counter() - t0
        except BaseException as exc:  # surfaced by the tracer
            events.put(exc)

    starts = [b.core.start for b in blocks]
    paths = _Paths(geometry)
    parked: dict[int, list[int]] = defaultdict(list)
    watermark = 0
    worker = threading.Thread(target=classify_stage, name="classify", daemon=True)
    worker.start()
    try:
        for _ in blocks:
            ev = events.get()
            if isinstance(ev, BaseException):
                raise ev
            block, saddles, reps = ev
            if block.core.start != watermark or block.core.stop <= watermark:
                raise PipelineError(f"block {block.id} does not extend the classified prefix")
            watermark = block.core.stop
            stats.watermarks.append(watermark)

            ready = []
            for s, r in zip(saddles.tolist(), reps):
                ready.extend(paths.start(s, r))
            for bid in sorted(k for k in parked if k <= block.id):
                resumed = parked.pop(bid)
                stats.resumes += len(resumed)
                ready.extend(resumed)
            if not ready:
                continue
            tt = time.perf_counter()
            adv = advance(cls, np.array([paths.last[i] for i in ready], dtype=np.int64),
                          watermark, geometry, executor, workers)
            stats.trace_busy_seconds += time.perf_counter() - tt
            stats.visits += adv.visits
            for j, pid in enumerate(ready):
                if geometry and adv.lengths[j]:
                    paths.segments[pid].append(adv.segments[j])
                last = int(adv.lasts[j])
                if adv.status[j] == DONE:
                    paths.maximum[pid] = last
                    continue
                if last < watermark:
                    raise PipelineError(f"path parked below the watermark at vertex {last}")
                paths.last[pid] = last
                parked[bisect.bisect_right(starts, last) - 1].append(pid)
                stats.parks += 1
            stats.parked_peak = max(stats.parked_peak, sum(len(v) for v in parked.values()))
        if parked:
            n = sum(len(v) for v in parked.values())
            raise PipelineError(f"{n} parked paths never resumed")
        if watermark != domain.size:
            raise PipelineError(f"watermark stopped at {watermark} of {domain.size}")
    finally:
        stop.set()
        worker.join()
        if executor is not None:
            executor.shutdown()

    finished = paths.finished()
    stats.path_vertices = sum(len(p.vertices) - 1 for p in finished) if geometry else stats.visits
    if geometry and stats.path_vertices != stats.visits:
        raise PipelineError(
            f"tracer visited {stats.visits} vertices for {stats.path_vertices} path vertices"
        )
    graph = build_graph(field, cls, finished, kind, dtype)
    stats.critical_counts = cls.counts()
    stats.total_seconds = time.perf_counter() - t0
    stats.trace_tail_seconds = max(0.0, stats.total_seconds - stats.classify_seconds)
    return PipelineResult(graph, cls, finished, stats)


def compute_graph(
    field: ScalarField,
    kind: str = "max",
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
    geometry: bool = True,
) -> PipelineResult:
    """Maximum or minimum graph of ``field``; minima via negation."""
    if kind not in ("max", "min"):
        raise ValueError(f"graph kind must be 'max' or 'min', got {kind!r}")
    work = negate(field) if kind == "min" else field
    return run_pipeline(work, partition(field.domain, budget), workers, geometry, kind, field.dtype)


def budget_for_blocks(domain: GridDomain, count: int) -> int:
    """A vertex budget for which :func:`partition` yields ``count`` blocks."""
    if count == 1:
        return domain.size
    nslabs = domain.dims[-1]
    for per_block in range(1, nslabs + 1):
        if -(-nslabs // per_block) == count:
            budget = (per_block + 2) * domain.slab_size
            if budget < domain.size:
                return budget
    raise ValueError(f"{domain.dims} cannot be split into exactly {count} blocks")
