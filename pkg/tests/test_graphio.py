import json

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from exgraph.graphio import (
    GraphFormatError,
    GraphVersionError,
    dumps_graph,
    read_graph,
    write_graph,
    write_report,
)
from exgraph.pipeline import budget_for_blocks, compute_graph
from exgraph.simplify import Arc, ExtremumGraph, bundle_arcs, cancel_persistence

from conftest import random_field


@st.composite
def graphs(draw):
    dims = tuple(draw(st.lists(st.integers(2, 6), min_size=1, max_size=4)))
    size = 1
    for d in dims:
        size *= d
    integer = draw(st.booleans())
    kind = draw(st.sampled_from(["max", "min"]))
    value = st.integers(-1000, 1000) if integer else st.floats(-1e6, 1e6, allow_nan=False)
    verts = draw(st.lists(st.integers(0, size - 1), unique=True, max_size=12))
    cut = draw(st.integers(0, len(verts)))
    maxima, saddles = set(verts[:cut]), set(verts[cut:])
    if not maxima:
        saddles = set()
    values = {v: draw(value) for v in maxima | saddles}
    geometry = draw(st.booleans())
    arcs = []
    for s in sorted(saddles):
        for m in draw(st.lists(st.sampled_from(sorted(maxima)), min_size=1, max_size=3)):
            first = draw(st.integers(0, size - 1))
            geo = (s, first, *draw(st.lists(st.integers(0, size - 1), max_size=4)), m) if geometry else None
            arcs.append(Arc(s, m, first, geo))
    lo = draw(value)
    trail = draw(st.sampled_from([[], ["bundle"], ["bundle", "persist:0.05", "saturate:0.05,0.95"]]))
    return ExtremumGraph(
        dims=dims, dtype="i32" if integer else "f64", kind=kind,
        value_range=(lo, lo + 10 if integer else lo + 10.5), values=values,
        maxima=maxima, saddles=saddles, arcs=arcs, trail=trail,
    )


@settings(max_examples=150, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(graphs())
def test_roundtrip_random_graphs(tmp_path, g):
    path = tmp_path / "g.txt"
    write_graph(g, path)
    back = read_graph(path)
    assert back == g
    assert dumps_graph(back) == path.read_text()


@pytest.mark.parametrize("kind", ["max", "min"])
def test_roundtrip_computed_graph(tmp_path, kind):
    f = random_field((7, 6, 5), 3, integer=True)
    g = compute_graph(f, kind=kind).graph
    write_graph(g, tmp_path / "g")
    back = read_graph(tmp_path / "g")
    assert back == g and back.kind == kind
    if kind == "min":
        # the document stores field values, not the oriented ones
        v = min(g.maxima)
        line = next(l for l in (tmp_path / "g").read_text().splitlines() if l.startswith(f"{v} max "))
        assert int(line.split()[2]) == int(f.values[v])


def test_simplified_graph_roundtrip(tmp_path):
    g = compute_graph(random_field((8, 8, 8), 1)).graph
    h = cancel_persistence(bundle_arcs(g), 0.1)
    write_graph(h, tmp_path / "h")
    assert read_graph(tmp_path / "h") == h


def test_empty_graph(tmp_path):
    g = ExtremumGraph(dims=(4, 4), dtype="u8")
    text = dumps_graph(g)
    assert "nodes 0\narcs 0\ngeometry none\nend\n" in text
    write_graph(g, tmp_path / "e")
    assert read_graph(tmp_path / "e") == g


def test_block_count_bytes_identical():
    f = random_field((8, 8, 16), 2)
    one = dumps_graph(compute_graph(f).graph)
    four = dumps_graph(compute_graph(f, budget=budget_for_blocks(f.domain, 4)).graph)
    assert one == four


def test_equality_is_byte_equality():
    g = compute_graph(random_field((6, 6, 6), 4)).graph
    h = g.copy()
    assert dumps_graph(g) == dumps_graph(h) and g == h
    h.arcs = h.arcs[:-1]
    h.saddles = {a.saddle for a in h.arcs}
    assert dumps_graph(g) != dumps_graph(h) and g != h


def test_truncated_file(tmp_path):
    g = compute_graph(random_field((6, 6, 6), 5)).graph
    text = dumps_graph(g)
    lines = text.splitlines(keepends=True)
    for cut in (1, 5, len(lines) // 2, len(lines) - 1):
        path = tmp_path / f"t{cut}"
        path.write_text("".join(lines[:cut]))
        with pytest.raises(GraphFormatError, match="end of file|expected"):
            read_graph(path)


def test_trailing_data(tmp_path):
    path = tmp_path / "x"
    path.write_text(dumps_graph(ExtremumGraph(dims=(2,), dtype="f32")) + "extra\n")
    with pytest.raises(GraphFormatError, match="trailing"):
        read_graph(path)


def test_header_byte_fuzz(tmp_path):
    good = dumps_graph(ExtremumGraph(dims=(3, 3), dtype="f32")).encode()
    header = len("EXGRAPH 1")
    path = tmp_path / "fuzz"
    for i in range(header):
        for b in range(256):
            if b == good[i]:
                continue
            path.write_bytes(good[:i] + bytes([b]) + good[i + 1:])
            with pytest.raises(GraphFormatError):
                read_graph(path)


def test_version_error(tmp_path):
    path = tmp_path / "v"
    path.write_text(dumps_graph(ExtremumGraph(dims=(3,), dtype="f32")).replace("EXGRAPH 1", "EXGRAPH 2"))
    with pytest.raises(GraphVersionError, match="version 2"):
        read_graph(path)


@pytest.mark.parametrize(
    "old, new, message",
    [
        ("dims 3 3", "dims 3", "extents"),
        ("dtype f32", "dtype f16", "dtype"),
        ("kind max", "kind sideways", "kind"),
        ("nodes 0", "nodes x", "node count"),
    ],
)
def test_malformed_header_fields(tmp_path, old, new, message):
    path = tmp_path / "m"
    path.write_text(dumps_graph(ExtremumGraph(dims=(3, 3), dtype="f32")).replace(old, new))
    with pytest.raises(GraphFormatError, match=message) as info:
        read_graph(path)
    assert info.value.line >= 1


def test_invalid_graph_rejected(tmp_path):
    g = compute_graph(random_field((6, 6), 1)).graph
    text = dumps_graph(g)
    s = min(g.saddles)
    text = text.replace(f"\n{s} saddle ", f"\n{s} max ", 1)
    path = tmp_path / "bad"
    path.write_text(text)
    with pytest.raises(GraphFormatError):
        read_graph(path)


def test_min_kind_surfaced(tmp_path):
    g = compute_graph(random_field((5, 5), 0), kind="min").graph
    write_graph(g, tmp_path / "g")
    assert read_graph(tmp_path / "g").kind == "min"


def test_table_output(tmp_path):
    f = random_field((5, 4, 3), 6)
    g = compute_graph(f).graph
    nodes, arcs = write_graph(g, tmp_path / "g", format="table")
    node_lines = nodes.read_text().splitlines()
    assert node_lines[0] == "vertex,kind,value,x0,x1,x2"
    assert len(node_lines) == 1 + len(g.maxima) + len(g.saddles)
    first = node_lines[1].split(",")
    v = int(first[0])
    assert tuple(int(c) for c in first[3:]) == f.domain.delinearize(v)
    assert len(arcs.read_text().splitlines()) == 1 + len(g.arcs)


def test_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        write_graph(ExtremumGraph(dims=(2,), dtype="u8"), tmp_path / "g", format="xml")


def test_write_failure_has_path(tmp_path):
    target = tmp_path / "missing" / "g.txt"
    with pytest.raises(OSError, match="missing"):
        write_graph(ExtremumGraph(dims=(2,), dtype="u8"), target)
    assert not (tmp_path / "missing").exists()


def test_no_temp_files_left(tmp_path):
    write_graph(ExtremumGraph(dims=(2,), dtype="u8"), tmp_path / "g")
    assert [p.name for p in tmp_path.iterdir()] == ["g"]


def test_report_json(tmp_path):
    write_report({"b": 1, "a": {"y": 2.5, "x": 0}}, tmp_path / "r.json")
    text = (tmp_path / "r.json").read_text()
    assert json.loads(text) == {"a": {"x": 0, "y": 2.5}, "b": 1}
    assert text.index('"a"') < text.index('"b"')


def test_non_utf8(tmp_path):
    path = tmp_path / "bin"
    path.write_bytes(b"\xff\xfe\x00garbage")
    with pytest.raises(GraphFormatError, match="UTF-8"):
        read_graph(path)
