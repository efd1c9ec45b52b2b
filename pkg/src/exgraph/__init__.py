"""Extremum graphs of scalar fields on n-dimensional grids."""

__version__ = "0.1.0"

from .field import ScalarField, load_raw, negate, sample_schwefel  # noqa: E402
from .grid import GridDomain  # noqa: E402
from .pipeline import compute_graph, partition, run_pipeline  # noqa: E402
from .simplify import (  # noqa: E402
    ExtremumGraph,
    bundle_arcs,
    cancel_persistence,
    graph_stats,
    saturated_simplify,
)

__all__ = [
    "ExtremumGraph",
    "GridDomain",
    "ScalarField",
    "bundle_arcs",
    "cancel_persistence",
    "compute_graph",
    "graph_stats",
    "load_raw",
    "negate",
    "partition",
    "run_pipeline",
    "sample_schwefel",
    "saturated_simplify",
]
