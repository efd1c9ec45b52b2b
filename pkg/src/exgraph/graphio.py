"""Reading and writing extremum graphs and run reports.

Graph document (UTF-8 text, one record per line, single spaces)::

    EXGRAPH 1
    dimension <n>
    dims <d0> ... <dn-1>
    dtype <u8|...|f64>
    kind <max|min>
    generator exgraph <version>
    range <field min> <field max>
    trail <op> ...              ("trail -" when unsimplified)
    nodes <N>
    <vertex> <max|saddle> <value>          x N, by vertex
    arcs <A>
    <saddle> <maximum> <first>             x A, by (saddle, maximum, first)
    geometry <A|none>
    <v0> <v1> ... <vk>                     x A, aligned with the arc records
    end

Values are written in field units; for minimum graphs they are the original
(not negated) samples.  Two equal graphs always produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

from . import __version__
from .field import DTYPES
from .grid import GridDomain
from .simplify import MAXIMUM, SADDLE, Arc, ExtremumGraph

MAGIC = "EXGRAPH"
VERSION = 1


class GraphFormatError(ValueError):
    """Malformed graph document."""

    def __init__(self, path, line: int, msg: str) -> None:
        super().__init__(f"{path}:{line}: {msg}")
        self.line = line


class GraphVersionError(GraphFormatError):
    """Graph document written by an incompatible format version."""


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(int(x))


def _external(g: ExtremumGraph, x):
    # stored values are oriented; documents carry field values
    return -x if g.kind == "min" else x


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to ``path`` so no partial file is ever left behind."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def dumps_graph(g: ExtremumGraph) -> str:
    lines = [
        f"{MAGIC} {VERSION}",
        f"dimension {len(g.dims)}",
        "dims " + " ".join(str(d) for d in g.dims),
        f"dtype {g.dtype}",
        f"kind {g.kind}",
        f"generator exgraph {__version__}",
    ]
    lo, hi = (_external(g, x) for x in g.value_range)
    if g.kind == "min":
        lo, hi = hi, lo
    lines.append(f"range {_fmt(lo)} {_fmt(hi)}")
    lines.append("trail " + (" ".join(g.trail) if g.trail else "-"))
    nodes = sorted(g.maxima | g.saddles)
    lines.append(f"nodes {len(nodes)}")
    for v in nodes:
        lines.append(f"{v} {g.node_kind(v)} {_fmt(_external(g, g.values[v]))}")
    arcs = g.sorted_arcs()
    lines.append(f"arcs {len(arcs)}")
    lines.extend(f"{a.saddle} {a.maximum} {a.first}" for a in arcs)
    if g.has_geometry:
        lines.append(f"geometry {len(arcs)}")
        lines.extend(" ".join(map(str, a.geometry)) for a in arcs)
    else:
        lines.append("geometry none")
    lines.append("end")
    return "\n".join(lines) + "\n"


def write_graph(g: ExtremumGraph, path: str | os.PathLike, format: str = "text") -> list[Path]:
    """Write ``g`` as a graph document or as ``<path>.nodes.csv`` and
    ``<path>.arcs.csv``.  Returns the files written."""
    path = Path(path)
    try:
        if format == "text":
            atomic_write(path, dumps_graph(g))
            return [path]
        if format == "table":
            return _write_tables(g, path)
    except OSError as exc:
        raise OSError(f"cannot write graph to {path}: {exc.strerror or exc}") from exc
    raise ValueError(f"unknown graph format {format!r}")


class _Lines:
    def __init__(self, path) -> None:
        self.path = path
        try:
            text = Path(path).read_text(encoding="utf-8")
        except UnicodeDecodeError as exc:
            raise GraphFormatError(path, 0, f"not UTF-8 text ({exc.reason})") from None
        self.lines = text.split("\n")
        if self.lines and self.lines[-1] == "":
            self.lines.pop()
        self.pos = 0

    def error(self, msg: str, cls=GraphFormatError):
        return cls(self.path, self.pos, msg)

    def next(self) -> str:
        if self.pos >= len(self.lines):
            self.pos += 1
            raise self.error("unexpected end of file")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def field(self, name: str) -> list[str]:
        parts = self.next().split(" ")
        if parts[0] != name or len(parts) < 2:
            raise self.error(f"expected '{name} ...'")
        return parts[1:]

    def single(self, name: str) -> str:
        parts = self.field(name)
        if len(parts) != 1:
            raise self.error(f"expected one value after '{name}'")
        return parts[0]

    def ints(self, parts: list[str], what: str) -> list[int]:
        try:
            return [int(p) for p in parts]
        except ValueError:
            raise self.error(f"non-integer {what}: {' '.join(parts)!r}") from None


def read_graph(path: str | os.PathLike) -> ExtremumGraph:
    """Parse a graph document written by :func:`write_graph`."""
    r = _Lines(path)
    head = r.next().split(" ")
    if len(head) != 2 or head[0] != MAGIC:
        raise r.error("not an extremum graph document")
    if head[1] != str(VERSION):
        if head[1].isdigit():
            raise r.error(f"format version {head[1]} unsupported (expected {VERSION})", GraphVersionError)
        raise r.error(f"bad format version {head[1]!r}")
    (n,) = r.ints([r.single("dimension")], "dimension")
    dims = tuple(r.ints(r.field("dims"), "extent"))
    if len(dims) != n:
        raise r.error(f"{len(dims)} extents for dimension {n}")
    dtype = r.single("dtype")
    if dtype not in DTYPES:
        raise r.error(f"unknown dtype {dtype!r}")
    kind = r.single("kind")
    if kind not in ("max", "min"):
        raise r.error(f"unknown graph kind {kind!r}")
    r.field("generator")
    parse = float if dtype.startswith("f") else int

    def value(text: str):
        try:
            x = parse(text)
        except ValueError:
            raise r.error(f"bad {dtype} value {text!r}") from None
        return -x if kind == "min" else x

    bounds = r.field("range")
    if len(bounds) != 2:
        raise r.error("expected 'range <min> <max>'")
    lo, hi = (value(t) for t in bounds)
    if kind == "min":
        lo, hi = hi, lo
    trail = r.field("trail")
    trail = [] if trail == ["-"] else trail

    (count,) = r.ints([r.single("nodes")], "node count")
    values, maxima, saddles = {}, set(), set()
    for _ in range(count):
        parts = r.next().split(" ")
        if len(parts) != 3 or parts[1] not in (MAXIMUM, SADDLE):
            raise r.error("expected '<vertex> <max|saddle> <value>'")
        (v,) = r.ints(parts[:1], "vertex")
        (maxima if parts[1] == MAXIMUM else saddles).add(v)
        values[v] = value(parts[2])
    (count,) = r.ints([r.single("arcs")], "arc count")
    keys = []
    for _ in range(count):
        parts = r.next().split(" ")
        if len(parts) != 3:
            raise r.error("expected '<saddle> <maximum> <first>'")
        keys.append(tuple(r.ints(parts, "arc field")))
    geo = r.single("geometry")
    geometry = [None] * len(keys)
    if geo != "none":
        (gcount,) = r.ints([geo], "geometry count")
        if gcount != len(keys):
            raise r.error(f"{gcount} polylines for {len(keys)} arcs")
        geometry = [tuple(r.ints(r.next().split(" "), "polyline vertex")) for _ in keys]
    if r.next() != "end":
        raise r.error("expected 'end'")
    if r.pos != len(r.lines):
        r.pos += 1
        raise r.error("trailing data after 'end'")
    g = ExtremumGraph(
        dims=dims, dtype=dtype, kind=kind, value_range=(lo, hi), values=values,
        maxima=maxima, saddles=saddles,
        arcs=[Arc(s, m, f, geom) for (s, m, f), geom in zip(keys, geometry)],
        trail=trail,
    )
    try:
        g.validate()
    except ValueError as exc:
        raise GraphFormatError(path, r.pos, str(exc)) from None
    return g


def _write_tables(g: ExtremumGraph, path: Path) -> list[Path]:
    domain = GridDomain(g.dims)
    axes = [f"x{i}" for i in range(len(g.dims))]
    nodes_path = path.with_name(path.name + ".nodes.csv")
    arcs_path = path.with_name(path.name + ".arcs.csv")

    def render(header, rows) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return buf.getvalue()

    node_rows = [
        [v, g.node_kind(v), _fmt(_external(g, g.values[v])), *domain.delinearize(v)]
        for v in sorted(g.maxima | g.saddles)
    ]
    arc_rows = [
        [a.saddle, a.maximum, a.first,
         _fmt(_external(g, g.values[a.saddle])), _fmt(_external(g, g.values[a.maximum]))]
        for a in g.sorted_arcs()
    ]
    atomic_write(nodes_path, render(["vertex", "kind", "value", *axes], node_rows))
    atomic_write(arcs_path, render(["saddle", "maximum", "first", "saddle_value", "maximum_value"], arc_rows))
    return [nodes_path, arcs_path]


def write_report(stats: dict, path: str | os.PathLike) -> None:
    """Write run metrics as sorted, indented JSON."""
    try:
        atomic_write(path, json.dumps(stats, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc.strerror or exc}") from exc
