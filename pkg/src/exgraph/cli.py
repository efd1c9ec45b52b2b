"""Command-line driver: load or generate a field, compute its extremum graph,
simplify, and write the graph and a run report.

Exit codes:
    0  success
    2  usage error (bad or conflicting flags)
    3  input error (unreadable or malformed field, bad parameter values)
    4  internal invariant violation (tracing or pipeline ordering)
    5  output error (graph or report could not be written)
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .field import DTYPES, FormatError, ScalarField, load_raw, sample_schwefel
from .graphio import atomic_write, dumps_graph, write_graph, write_report
from .pipeline import DEFAULT_BUDGET, PipelineError, budget_for_blocks, compute_graph
from .simplify import ExtremumGraph, bundle_arcs, cancel_persistence, graph_stats, saturated_simplify
from .trace import TraceError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_INTERNAL = 4
EXIT_OUTPUT = 5

MAX_DIMENSION = 8
THREADS_ENV = "EXGRAPH_THREADS"
DEFAULT_SIMPLIFY = ("bundle", "persist:0.05", "saturate:0.05,0.95")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    dims: tuple[int, ...]
    input: Path | None = None
    generate: str | None = None
    bounds: tuple[float, float] = (-500.0, 500.0)
    dtype: str = "f32"
    endian: str = "le"
    kind: str = "max"
    block_budget: int = DEFAULT_BUDGET
    threads: int = 1
    geometry: bool = True
    simplify: list[tuple] = field(default_factory=list)
    out: Path | None = None
    format: str = "text"
    report: Path | None = None
    bench: tuple[str, list[int]] | None = None


def default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return int(env)
    return os.cpu_count() or 1


def parse_simplify(text: str) -> tuple:
    name, _, arg = text.partition(":")
    op = None
    try:
        if name == "bundle" and not arg:
            op = ("bundle",)
        elif name == "persist":
            op = ("persist", float(arg))
        elif name == "saturate":
            lo, hi = arg.split(",")
            op = ("saturate", float(lo), float(hi))
    except ValueError:
        pass
    if op is None:
        raise UsageError(f"bad --simplify value {text!r}; use bundle, persist:T or saturate:PLO,PHI")
    if op[0] == "persist" and not 0 <= op[1] <= 1:
        raise UsageError(f"persistence threshold must lie in [0, 1], got {arg}")
    if op[0] == "saturate" and not 0 <= op[1] < op[2] <= 1:
        raise UsageError(f"saturation band needs 0 <= PLO < PHI <= 1, got {arg}")
    return op


def _int_list(text: str, what: str) -> list[int]:
    try:
        out = [int(x) for x in text.split(",") if x]
    except ValueError:
        raise UsageError(f"{what} must be a comma-separated list of integers, got {text!r}") from None
    if not out:
        raise UsageError(f"empty {what}")
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="exgraph",
        description="Compute and simplify extremum graphs of gridded scalar fields.",
    )
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--in", dest="input", metavar="PATH", help="headerless raw sample volume")
    src.add_argument("--generate", choices=["schwefel"], help="synthesize the input field")
    p.add_argument("--dims", required=True, help="per-axis vertex counts, axis 0 first: d0,d1,...")
    p.add_argument("--dtype", choices=sorted(DTYPES), default="f32")
    p.add_argument("--endian", choices=["le", "be"], default="le")
    p.add_argument("--bounds", default="-500,500", help="generator domain LO,HI per axis")
    p.add_argument("--kind", choices=["max", "min"], default="max")
    p.add_argument("--block-budget", "--blocks-budget", dest="block_budget", default=str(DEFAULT_BUDGET), help="max vertices per block incl. ghosts")
    p.add_argument("--threads", type=int, default=None, help=f"worker count (default: ${THREADS_ENV} or all cores)")
    p.add_argument("--geometry", choices=["on", "off"], default="on")
    p.add_argument("--simplify", action="append", metavar="OP",
                   help="bundle | persist:T | saturate:PLO,PHI (repeatable, applied in order); "
                        "default: " + " ".join(DEFAULT_SIMPLIFY) + "; 'none' disables")
    p.add_argument("--out", metavar="PATH", help="graph output path")
    p.add_argument("--format", choices=["text", "table"], default="text")
    p.add_argument("--report", metavar="PATH", help="JSON run report path")
    p.add_argument("--bench", metavar="SWEEP", help="threads:LIST | blocks:LIST | resolution:LIST")
    p.add_argument("--progress", action="store_true", help="print stage progress on stdout")
    p.add_argument("--version", action="version", version=f"exgraph {__version__}")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    dims = tuple(_int_list(args.dims, "--dims"))
    if len(dims) > MAX_DIMENSION:
        raise UsageError(f"at most {MAX_DIMENSION} dimensions are supported, got {len(dims)}")
    if any(d < 1 for d in dims):
        raise UsageError(f"--dims entries must be positive, got {args.dims}")
    try:
        budget = int(float(args.block_budget))
        lo, hi = (float(x) for x in args.bounds.split(","))
    except ValueError:
        raise UsageError("--block-budget must be a number and --bounds LO,HI") from None
    slab = int(np.prod(dims[:-1], dtype=np.int64))
    if budget < min(3 * slab, int(np.prod(dims, dtype=np.int64))):
        raise UsageError(f"--block-budget {budget} is below the minimum of {3 * slab} vertices (three slabs)")
    threads = args.threads if args.threads is not None else default_threads()
    if threads < 1:
        raise UsageError("--threads must be >= 1")
    if args.simplify is None:
        ops = [parse_simplify(s) for s in DEFAULT_SIMPLIFY]
    elif args.simplify == ["none"]:
        ops = []
    else:
        ops = [parse_simplify(s) for s in args.simplify]
    bench = None
    if args.bench:
        name, _, values = args.bench.partition(":")
        if name not in ("threads", "blocks", "resolution"):
            raise UsageError(f"unknown --bench sweep {name!r}")
        bench = (name, _int_list(values, "--bench list"))
    return RunConfig(
        dims=dims,
        input=Path(args.input) if args.input else None,
        generate=args.generate,
        bounds=(lo, hi),
        dtype=args.dtype,
        endian=args.endian,
        kind=args.kind,
        block_budget=budget,
        threads=threads,
        geometry=args.geometry == "on",
        simplify=ops,
        out=Path(args.out) if args.out else None,
        format=args.format,
        report=Path(args.report) if args.report else None,
        bench=bench,
    )


def load_field(config: RunConfig) -> ScalarField:
    if config.input is not None:
        try:
            return load_raw(config.input, config.dims, config.dtype, config.endian)
        except OSError as exc:
            raise FormatError(f"cannot read {config.input}: {exc.strerror or exc}") from None
    return sample_schwefel(config.dims, *config.bounds)


def apply_simplification(graph, ops):
    for op in ops:
        if op[0] == "bundle":
            graph = bundle_arcs(graph)
        elif op[0] == "persist":
            graph = cancel_persistence(graph, op[1])
        else:
            graph = saturated_simplify(graph, op[1], op[2])
    return graph


def graph_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def execute(config: RunConfig, progress=None) -> tuple[ExtremumGraph, str, dict]:
    """Run the full computation; returns the graph, its document and the
    run report."""
    say = progress or (lambda msg: None)
    t0 = time.perf_counter()
    field = load_field(config)
    t_load = time.perf_counter() - t0
    say(f"loaded {field.domain.dims} {field.dtype}")

    result = compute_graph(field, config.kind, config.block_budget, config.threads, config.geometry)
    st = result.stats
    say(f"graph: {len(result.graph.maxima)} maxima, {len(result.graph.saddles)} saddles")

    t1 = time.perf_counter()
    graph = apply_simplification(result.graph, config.simplify)
    t_simplify = time.perf_counter() - t1

    t2 = time.perf_counter()
    text = dumps_graph(graph)
    t_write = time.perf_counter() - t2
    report = {
        "tool": f"exgraph {__version__}",
        "dims": list(field.domain.dims),
        "dtype": field.dtype,
        "kind": config.kind,
        "workers": config.threads,
        "block_budget": config.block_budget,
        "block_count": st.block_count,
        "parked_peak": st.parked_peak,
        "parks": st.parks,
        "resumes": st.resumes,
        "tracer_visits": st.visits,
        "critical_points": st.critical_counts,
        "unsimplified": graph_stats(result.graph),
        "simplified": graph_stats(graph, result.graph),
        "simplification": list(graph.trail),
        "stages": {
            "load_seconds": t_load,
            "classify_seconds": st.classify_seconds,
            "trace_seconds": st.trace_tail_seconds,
            "simplify_seconds": t_simplify,
            "serialize_seconds": t_write,
        },
        "busy": {
            "classify_seconds": st.classify_busy_seconds,
            "trace_seconds": st.trace_busy_seconds,
        },
        "graph_sha256": graph_digest(text),
    }
    report["total_seconds"] = time.perf_counter() - t0
    return graph, text, report


def run(config: RunConfig, progress=None) -> int:
    graph, text, report = execute(config, progress)
    written: list[Path] = []
    try:
        if config.out is not None:
            if config.format == "text":
                atomic_write(config.out, text)
                written.append(config.out)
            else:
                written.extend(write_graph(graph, config.out, "table"))
        if config.report is not None:
            write_report(report, config.report)
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    return EXIT_OK


def _linear_fit(x: list[float], y: list[float]) -> dict:
    x_arr, y_arr = np.asarray(x, float), np.asarray(y, float)
    slope, intercept = np.polyfit(x_arr, y_arr, 1)
    pred = slope * x_arr + intercept
    ss_res = float(np.sum((y_arr - pred) ** 2))
    ss_tot = float(np.sum((y_arr - y_arr.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return {"slope": float(slope), "intercept": float(intercept), "r2": r2}


def bench(config: RunConfig, sweep: tuple[str, list[int]], progress=None) -> dict:
    """Time the pipeline across a sweep of thread counts, block counts or
    domain resolutions."""
    say = progress or (lambda msg: None)
    kind, values = sweep
    points = []
    base_field = None if kind == "resolution" else load_field(config)
    for value in values:
        if kind == "resolution":
            dims = (value,) * len(config.dims)
            f = sample_schwefel(dims, *config.bounds)
            budget, threads = config.block_budget, config.threads
        else:
            f = base_field
            threads = value if kind == "threads" else config.threads
            budget = budget_for_blocks(f.domain, value) if kind == "blocks" else config.block_budget
        t0 = time.perf_counter()
        result = compute_graph(f, config.kind, budget, threads, config.geometry)
        wall = time.perf_counter() - t0
        st = result.stats
        points.append({
            kind: value,
            "vertices": f.domain.size,
            "wall_seconds": wall,
            "classify_seconds": st.classify_seconds,
            "classify_busy_seconds": st.classify_busy_seconds,
            "trace_busy_seconds": st.trace_busy_seconds,
            "block_count": st.block_count,
            "parked_peak": st.parked_peak,
            "critical_points": st.critical_counts.get("critical", 0),
            "graph_sha256": graph_digest(dumps_graph(result.graph)),
        })
        say(f"{kind}={value}: {wall:.3f}s")
    out = {"sweep": kind, "points": points}
    if points:
        t_first = points[0]["wall_seconds"]
        out["speedup"] = [t_first / p["wall_seconds"] if p["wall_seconds"] else 0.0 for p in points]
        out["identical_graphs"] = len({p["graph_sha256"] for p in points}) == 1
    if kind == "resolution" and len(points) >= 2:
        out["classify_vs_vertices"] = _linear_fit(
            [p["vertices"] for p in points], [p["classify_busy_seconds"] for p in points]
        )
    return out


def _error(msg: str) -> None:
    print(f"exgraph: {msg}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    progress = (lambda msg: print(msg, flush=True)) if args.progress else None
    try:
        config = config_from_args(args)
        if config.bench:
            if config.input is None and config.generate is None:
                raise UsageError("--bench needs an input")
            result = bench(config, config.bench, progress)
            if config.report is not None:
                write_report(result, config.report)
            else:
                json.dump(result, sys.stderr, indent=2)
                sys.stderr.write("\n")
            return EXIT_OK
        return run(config, progress)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        _error(str(exc))
        return EXIT_USAGE
    except (TraceError, PipelineError) as exc:
        _error(f"internal error: {exc}")
        return EXIT_INTERNAL
    except OSError as exc:
        _error(str(exc))
        return EXIT_OUTPUT
    except (ValueError, OverflowError) as exc:
        _error(str(exc))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
