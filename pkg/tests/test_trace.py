from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from exgraph.classify import Criticality, classify_all
from exgraph.field import ScalarField, compare
from exgraph.grid import grid_adjacency
from exgraph.trace import TraceError, trace_all, trace_gradient_paths

from conftest import random_field
from oracles import BruteField


def two_bumps(n=16):
    x, y = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    a = np.exp(-((x - 4.0) ** 2 + (y - 7.0) ** 2) / 6.0)
    b = np.exp(-((x - 11.0) ** 2 + (y - 8.0) ** 2) / 6.0)
    return ScalarField.from_array(np.maximum(a, b))


def test_two_bumps_connected_by_one_saddle():
    f = two_bumps()
    cls, index = classify_all(f)
    oracle = BruteField(f.as_array())
    maxima, saddles, arcs = oracle.graph()
    paths = trace_all(index, cls)
    assert index.maxima.tolist() == maxima
    assert sorted((p.saddle, p.maximum, p.first, p.vertices) for p in paths) == arcs
    a, b = f.domain.linearize((4, 7)), f.domain.linearize((11, 8))
    assert {a, b} <= set(index.maxima.tolist())
    bridging = [s for s in index.saddles.tolist() if {p.maximum for p in paths if p.saddle == s} == {a, b}]
    assert len(bridging) == 1


def ring_field():
    # a square loop of ridge cells rising from one saddle to one peak in both directions
    a = np.zeros((9, 9))
    loop = ([(1 + i, 1) for i in range(6)] + [(7, 1 + i) for i in range(6)]
            + [(7 - i, 7) for i in range(6)] + [(1, 7 - i) for i in range(6)])
    for k, p in enumerate(loop):
        a[p] = 100 - min(k, 24 - k) - 0.01 * (k > 12)
    return ScalarField.from_array(a)


def test_pinched_saddle_paths_share_maximum():
    f = ring_field()
    cls, index = classify_all(f)
    paths = trace_all(index, cls)
    peak = f.domain.linearize((1, 1))
    assert index.maxima.tolist() == [peak]
    assert index.saddles.tolist() == [f.domain.linearize((7, 7))]
    assert [p.maximum for p in paths] == [peak, peak]
    assert len({p.first for p in paths}) == 2
    maxima, saddles, arcs = BruteField(f.as_array()).graph()
    assert sorted((p.saddle, p.maximum, p.first, p.vertices) for p in paths) == arcs


def test_no_saddles_no_paths():
    g = np.indices((6, 6, 6)) - 2
    f = ScalarField.from_array(-np.sum(g.astype(float) ** 2, axis=0))
    cls, index = classify_all(f)
    assert index.saddles.size == 0
    assert trace_all(index, cls) == []


def check_path_invariants(f, cls, paths):
    maxima = set(np.flatnonzero(cls.criticality == Criticality.MAXIMUM).tolist())
    for p in paths:
        v = p.vertices
        assert len(v) >= 2
        assert v[0] == p.saddle and v[-1] == p.maximum and v[1] == p.first
        assert p.maximum in maxima
        for a, b in zip(v, v[1:]):
            assert grid_adjacency(f.domain.delinearize(a), f.domain.delinearize(b))
            assert compare(a, b, f) == -1


@pytest.mark.parametrize("seed", range(8))
def test_trace_matches_serial_oracle(seed):
    f = random_field((8, 8, 8), seed, integer=seed % 2 == 1)
    cls, index = classify_all(f)
    paths = trace_all(index, cls)
    maxima, saddles, arcs = BruteField(f.as_array()).graph()
    assert sorted((p.saddle, p.maximum, p.first, p.vertices) for p in paths) == arcs
    assert len(paths) == int(cls.beta_plus[index.saddles].sum())
    check_path_invariants(f, cls, paths)


def test_per_saddle_tracer_agrees_with_batch():
    f = random_field((9, 9, 9), 11)
    cls, index = classify_all(f)
    batch = trace_all(index, cls)
    maxima = set(index.maxima.tolist())
    serial = []
    for s, reps in zip(index.saddles.tolist(), index.reps):
        serial.extend(trace_gradient_paths(s, reps.tolist(), cls, maxima))
    assert serial == batch


def test_schedule_independence():
    f = random_field((24, 24, 24), 2)
    cls, index = classify_all(f)
    one = trace_all(index, cls)
    for w in (2, 8):
        with ThreadPoolExecutor(w) as ex:
            assert trace_all(index, cls, executor=ex, workers=w) == one


def test_confluence():
    f = random_field((10, 10, 10), 9)
    cls, index = classify_all(f)
    suffix = {}
    for p in trace_all(index, cls):
        for i, v in enumerate(p.vertices[1:], 1):
            tail = p.vertices[i:]
            assert suffix.setdefault(v, tail) == tail


def test_topology_only_mode():
    f = random_field((8, 8, 8), 1)
    cls, index = classify_all(f)
    full = trace_all(index, cls)
    bare = trace_all(index, cls, geometry=False)
    assert [(p.saddle, p.first, p.maximum) for p in bare] == [(p.saddle, p.first, p.maximum) for p in full]
    assert all(p.vertices is None for p in bare)


def test_cycle_guard():
    f = random_field((4, 4), 0)
    cls, index = classify_all(f)
    cls.ascent[:] = np.roll(np.arange(16), 1)
    cls.criticality[:] = Criticality.REGULAR
    with pytest.raises(TraceError):
        trace_gradient_paths(0, [1], cls)
    index.saddles = np.array([0])
    index.reps = [np.array([1])]
    with pytest.raises(TraceError):
        trace_all(index, cls)
