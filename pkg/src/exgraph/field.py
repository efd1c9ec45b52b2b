"""Scalar fields on a grid: raw ingestion, negation, the perturbed vertex
order, and the Schwefel test function."""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import GridDomain

DTYPES: dict[str, np.dtype] = {
    "u8": np.dtype(np.uint8),
    "u16": np.dtype(np.uint16),
    "u32": np.dtype(np.uint32),
    "u64": np.dtype(np.uint64),
    "i8": np.dtype(np.int8),
    "i16": np.dtype(np.int16),
    "i32": np.dtype(np.int32),
    "i64": np.dtype(np.int64),
    "f32": np.dtype(np.float32),
    "f64": np.dtype(np.float64),
}
_CODES = {dt: code for code, dt in DTYPES.items()}

# lossless target of negation for each sample type
_NEGATED = {
    "u8": "i16",
    "u16": "i32",
    "u32": "i64",
    "u64": "i64",
    "i8": "i16",
    "i16": "i32",
    "i32": "i64",
    "i64": "i64",
    "f32": "f32",
    "f64": "f64",
}

SCHWEFEL_CONSTANT = 418.9829


class FormatError(ValueError):
    """Raw input does not match the declared layout."""


def dtype_code(dtype) -> str:
    dt = np.dtype(dtype).newbyteorder("=")
    try:
        return _CODES[dt]
    except KeyError:
        raise ValueError(f"unsupported sample type {dtype!r}") from None


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Samples at the vertices of ``domain`` in linear-index order."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.ascontiguousarray(self.values).reshape(-1)
        if values.dtype.byteorder not in ("=", "|"):
            values = values.astype(values.dtype.newbyteorder("="))
        dtype_code(values.dtype)
        if values.size != self.domain.size:
            raise ValueError(
                f"{values.size} samples for a grid of {self.domain.size} vertices"
            )
        if values.dtype.kind == "f" and not np.isfinite(values).all():
            raise ValueError("floating point samples must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_array(cls, array: np.ndarray) -> "ScalarField":
        """Wrap an array indexed ``array[x0, x1, ...]`` (axis 0 first)."""
        array = np.asarray(array)
        return cls(GridDomain(array.shape), np.ravel(array, order="F"))

    @property
    def dtype(self) -> str:
        return dtype_code(self.values.dtype)

    def as_array(self) -> np.ndarray:
        """View with shape ``domain.dims`` indexed by coordinates."""
        return self.values.reshape(self.domain.dims, order="F")

    def value_range(self) -> tuple:
        return self.values.min().item(), self.values.max().item()

    def __getitem__(self, v: int):
        return self.values[v].item()


def load_raw(
    path: str | os.PathLike,
    dims: Sequence[int],
    dtype: str,
    endian: str = "le",
) -> ScalarField:
    """Read a headerless sample volume (axis 0 fastest)."""
    if dtype not in DTYPES:
        raise ValueError(f"unknown dtype {dtype!r}; expected one of {sorted(DTYPES)}")
    if endian not in ("le", "be"):
        raise ValueError(f"unknown endianness {endian!r}")
    domain = GridDomain(tuple(dims))
    dt = DTYPES[dtype].newbyteorder("<" if endian == "le" else ">")
    expected = domain.size * dt.itemsize
    actual = os.path.getsize(path)
    if actual != expected:
        raise FormatError(
            f"{path}: expected {expected} bytes for {domain.dims} x {dtype}, "
            f"found {actual}"
        )
    values = np.fromfile(path, dtype=dt)
    return ScalarField(domain, values)


def save_raw(field: ScalarField, path: str | os.PathLike, endian: str = "le") -> None:
    dt = field.values.dtype.newbyteorder("<" if endian == "le" else ">")
    field.values.astype(dt).tofile(path)


def negate(field: ScalarField) -> ScalarField:
    """Sign flip, promoting integers so no value is lost.

    The maximum graph of the result is the minimum graph of ``field``.
    """
    src = field.values
    target = DTYPES[_NEGATED[field.dtype]]
    if src.dtype.kind in "ui" and src.size:
        info = np.iinfo(target)
        if src.max() > -info.min or src.min() < -info.max:
            raise OverflowError(
                f"{field.dtype} samples exceed the range negation can represent"
            )
    return ScalarField(field.domain, np.negative(src.astype(target)))


def compare(u: int, v: int, field: ScalarField) -> int:
    """-1 if u precedes v in the perturbed order, +1 otherwise."""
    if u == v:
        raise ValueError("compare needs two distinct vertices")
    fu, fv = field.values[u], field.values[v]
    if fu < fv or (fu == fv and u < v):
        return -1
    return 1


def order_key(field: ScalarField, v: int) -> tuple:
    return field.values[v].item(), v


def sample_schwefel(
    dims: Sequence[int],
    lo: float | Sequence[float] = -500.0,
    hi: float | Sequence[float] = 500.0,
) -> ScalarField:
    """Schwefel function sampled on a regular lattice spanning [lo, hi]."""
    domain = GridDomain(tuple(dims))
    n = domain.n
    los = np.broadcast_to(np.asarray(lo, dtype=np.float64), (n,))
    his = np.broadcast_to(np.asarray(hi, dtype=np.float64), (n,))
    if any(d < 2 for d in domain.dims):
        raise ValueError(f"each axis needs at least 2 samples, got {domain.dims}")
    if np.any(los >= his):
        raise ValueError("lower bounds must be below upper bounds")
    # array axes run last-to-first so a C-order ravel puts axis 0 fastest
    total = np.full(domain.dims[::-1], SCHWEFEL_CONSTANT * n, dtype=np.float64)
    for axis, (d, a, b) in enumerate(zip(domain.dims, los, his)):
        x = a + np.arange(d, dtype=np.float64) * ((b - a) / (d - 1))
        term = x * np.sin(np.sqrt(np.abs(x)))
        shape = [1] * n
        shape[n - 1 - axis] = d
        total -= term.reshape(shape)
    return ScalarField(domain, total.ravel())


def schwefel(x: Sequence[float]) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(SCHWEFEL_CONSTANT * x.size - np.sum(x * np.sin(np.sqrt(np.abs(x)))))
