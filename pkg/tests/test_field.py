import numpy as np
import pytest
from hypothesis import given, strategies as st

from exgraph.classify import Criticality, classify_all
from exgraph.field import (
    DTYPES,
    FormatError,
    ScalarField,
    compare,
    load_raw,
    negate,
    sample_schwefel,
    save_raw,
    schwefel,
)
from exgraph.grid import GridDomain


def test_load_raw_nucleon_shape(tmp_path):
    path = tmp_path / "vol.raw"
    path.write_bytes(bytes(range(256)) * 269 + bytes(68921 - 256 * 269))
    f = load_raw(path, (41, 41, 41), "u8")
    assert f.domain.size == 68921
    assert f.dtype == "u8"
    assert f.values[0] == 0 and f.values[1] == 1


def test_load_raw_size_mismatch(tmp_path):
    path = tmp_path / "small.raw"
    path.write_bytes(b"\x00" * 5)
    with pytest.raises(FormatError, match="expected 4 bytes.*found 5"):
        load_raw(path, (2, 2), "u8")


def test_load_raw_float_volume(tmp_path):
    path = tmp_path / "f.raw"
    np.arange(64**3, dtype="<f4").tofile(path)
    assert path.stat().st_size == 1_048_576
    f = load_raw(path, (64, 64, 64), "f32")
    assert f.values[12345] == 12345.0


def test_load_raw_unknown_dtype(tmp_path):
    path = tmp_path / "x.raw"
    path.write_bytes(b"\x00" * 4)
    with pytest.raises(ValueError):
        load_raw(path, (2, 2), "u12")


def test_big_endian(tmp_path):
    path = tmp_path / "be.raw"
    np.array([1, 2, 3, 258], dtype=">u2").tofile(path)
    f = load_raw(path, (4,), "u16", "be")
    assert f.values.tolist() == [1, 2, 3, 258]


@pytest.mark.parametrize("dtype", ["u8", "i16", "u32", "i64", "f32", "f64"])
@pytest.mark.parametrize("endian", ["le", "be"])
def test_raw_roundtrip_byte_identical(tmp_path, dtype, endian):
    rng = np.random.default_rng(1)
    dt = DTYPES[dtype].newbyteorder("<" if endian == "le" else ">")
    if dtype[0] == "f":
        raw = rng.normal(size=120).astype(dt).tobytes()
    else:
        raw = rng.integers(0, 256, size=120 * dt.itemsize, dtype=np.uint8).tobytes()
    src = tmp_path / "a.raw"
    src.write_bytes(raw)
    f = load_raw(src, (6, 5, 4), dtype, endian)
    out = tmp_path / "b.raw"
    save_raw(f, out, endian)
    assert out.read_bytes() == raw


def test_negate_values():
    f = ScalarField(GridDomain((3,)), np.array([1, 2, 3], dtype=np.int32))
    assert negate(f).values.tolist() == [-1, -2, -3]


def test_negate_promotes_unsigned():
    f = ScalarField(GridDomain((2,)), np.array([0, 255], dtype=np.uint8))
    g = negate(f)
    assert g.values.tolist() == [0, -255]
    assert g.dtype == "i16"


def test_negate_involution():
    rng = np.random.default_rng(0)
    f = ScalarField(GridDomain((4, 4)), rng.random(16))
    assert np.array_equal(negate(negate(f)).values, f.values)
    u = ScalarField(GridDomain((4,)), np.array([0, 7, 200, 9], dtype=np.uint8))
    assert negate(negate(u)).values.tolist() == u.values.tolist()


def test_negate_u64_overflow():
    f = ScalarField(GridDomain((1,)), np.array([2**64 - 1], dtype=np.uint64))
    with pytest.raises(OverflowError):
        negate(f)


def test_compare_examples():
    f = ScalarField(GridDomain((10,)), np.array([0, 1.0, 2.0, 5, 0, 0, 0, 5, 0, 0], dtype=float))
    assert compare(1, 2, f) == -1
    assert compare(3, 7, f) == -1 and compare(7, 3, f) == 1
    with pytest.raises(ValueError):
        compare(4, 4, f)


def test_constant_field_order_is_index_order():
    f = ScalarField(GridDomain((5,)), np.zeros(5))
    for u in range(5):
        for v in range(5):
            if u != v:
                assert compare(u, v, f) == (-1 if u < v else 1)


@given(st.lists(st.integers(-3, 3), min_size=3, max_size=12), st.data())
def test_compare_total_order(vals, data):
    f = ScalarField(GridDomain((len(vals),)), np.array(vals, dtype=np.int64))
    idx = st.integers(0, len(vals) - 1)
    u, v, w = data.draw(idx), data.draw(idx), data.draw(idx)
    if u != v:
        assert compare(u, v, f) == -compare(v, u, f)
    if len({u, v, w}) == 3 and compare(u, v, f) < 0 and compare(v, w, f) < 0:
        assert compare(u, w, f) < 0


def test_schwefel_known_values():
    for n in (1, 2, 3, 5):
        assert abs(schwefel([420.9687] * n)) < 1e-3 * n
        assert schwefel([0.0] * n) == pytest.approx(418.9829 * n)


def test_schwefel_lattice_mapping():
    f = sample_schwefel((5, 3), lo=-500, hi=500)
    arr = f.as_array()
    xs = np.linspace(-500, 500, 5)
    ys = np.linspace(-500, 500, 3)
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            assert arr[i, j] == pytest.approx(schwefel([x, y]))
    # origin sits on the lattice when the extent is odd
    assert f.as_array()[2, 1] == pytest.approx(418.9829 * 2)


def test_schwefel_rejects_degenerate_axes():
    with pytest.raises(ValueError):
        sample_schwefel((1, 4))
    with pytest.raises(ValueError):
        sample_schwefel((4, 4), lo=1, hi=1)


def test_schwefel_maxima_stable_across_resolution():
    counts = []
    for r in (128, 256):
        cls, _ = classify_all(sample_schwefel((r, r, r)))
        counts.append(int(np.count_nonzero(cls.criticality == Criticality.MAXIMUM)))
    assert counts[0] == counts[1] > 0


def test_rejects_non_finite():
    with pytest.raises(ValueError):
        ScalarField(GridDomain((2,)), np.array([1.0, np.nan]))
