import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cassigsm import (BadMagicError, DimensionOverflowError, FormatError,
                      HsiCube, Mask2D, Measurement, TruncatedPayloadError,
                      load_cube, load_mask, load_measurement, save_cube,
                      save_mask, save_measurement)


def test_cube_round_trip_bytes(tmp_path, rng):
    cube = HsiCube(rng.random((3, 4, 5), dtype=np.float32))
    p = tmp_path / "a.hsc"
    save_cube(cube, p)
    save_cube(load_cube(p), tmp_path / "b.hsc")
    assert p.read_bytes() == (tmp_path / "b.hsc").read_bytes()


@settings(max_examples=40, deadline=None)
@given(
    dims=st.tuples(st.integers(1, 4), st.integers(1, 5), st.integers(1, 5)),
    data=st.data(),
)
def test_cube_round_trip_property(tmp_path_factory, dims, data):
    values = data.draw(arrays(np.float32, dims,
                              elements=st.floats(0.0, 1.0, width=32)))
    cube = HsiCube(values)
    p = tmp_path_factory.mktemp("hsc") / "prop.hsc"
    save_cube(cube, p)
    back = load_cube(p)
    assert back.data.tobytes() == cube.data.tobytes()
    assert back.shape == cube.shape


def test_zero_cube_file_size(tmp_path):
    # 4 magic + 3*4 header ints, then 8 float32 payload values
    cube = HsiCube(np.zeros((2, 2, 2), dtype=np.float32))
    p = tmp_path / "z.hsc"
    save_cube(cube, p)
    raw = p.read_bytes()
    assert len(raw) == 16 + 32
    assert raw[:4] == b"HSC1"
    assert struct.unpack("<III", raw[4:16]) == (2, 2, 2)


def test_bad_magic(tmp_path):
    p = tmp_path / "bad.hsc"
    p.write_bytes(b"XXXX" + b"\x00" * 44)
    with pytest.raises(BadMagicError):
        load_cube(p)


def test_truncated_payload(tmp_path):
    cube = HsiCube(np.zeros((2, 2, 2), dtype=np.float32))
    p = tmp_path / "t.hsc"
    save_cube(cube, p)
    (tmp_path / "short.hsc").write_bytes(p.read_bytes()[:-4])
    with pytest.raises(TruncatedPayloadError):
        load_cube(tmp_path / "short.hsc")
    (tmp_path / "long.hsc").write_bytes(p.read_bytes() + b"\x00" * 4)
    with pytest.raises(TruncatedPayloadError):
        load_cube(tmp_path / "long.hsc")
    (tmp_path / "header.hsc").write_bytes(b"HSC1\x02\x00")
    with pytest.raises(TruncatedPayloadError):
        load_cube(tmp_path / "header.hsc")


def test_dimension_overflow(tmp_path):
    p = tmp_path / "o.hsc"
    p.write_bytes(b"HSC1" + struct.pack("<III", 2 ** 31, 2 ** 31, 4))
    with pytest.raises(DimensionOverflowError):
        load_cube(p)
    p.write_bytes(b"HSC1" + struct.pack("<III", 0, 3, 3))
    with pytest.raises(DimensionOverflowError):
        load_cube(p)


def test_non_finite_payload_rejected(tmp_path):
    payload = np.array([np.nan] * 8, dtype="<f4").tobytes()
    p = tmp_path / "nan.hsc"
    p.write_bytes(b"HSC1" + struct.pack("<III", 2, 2, 2) + payload)
    with pytest.raises(FormatError):
        load_cube(p)


def test_load_clamps_to_peak(tmp_path):
    payload = np.array([1.5, -0.5, 0.25, 0.75], dtype="<f4").tobytes()
    p = tmp_path / "c.hsc"
    p.write_bytes(b"HSC1" + struct.pack("<III", 2, 2, 1) + payload)
    cube = load_cube(p)
    assert cube.data.min() >= 0.0 and cube.data.max() <= 1.0


def test_mask_round_trip(tmp_path, rng):
    mask = Mask2D(rng.random((5, 7), dtype=np.float32))
    p = tmp_path / "m.msk"
    save_mask(mask, p)
    assert load_mask(p) == mask
    assert p.read_bytes()[:4] == b"MSK1"


def test_mask_payload_range_checked(tmp_path):
    payload = np.array([0.5, 1.5], dtype="<f4").tobytes()
    p = tmp_path / "m.msk"
    p.write_bytes(b"MSK1" + struct.pack("<II", 1, 2) + payload)
    with pytest.raises(FormatError):
        load_mask(p)


def test_measurement_round_trip(tmp_path, rng):
    meas = Measurement(rng.random((4, 9), dtype=np.float32), step=2, bands=3)
    p = tmp_path / "y.mea"
    save_measurement(meas, p)
    back = load_measurement(p)
    assert back == meas
    assert back.step == 2 and back.bands == 3


def test_measurement_header_consistency(tmp_path):
    # width 4 cannot hold step=2 * (bands-1)=3 shifts
    payload = np.zeros(8, dtype="<f4").tobytes()
    p = tmp_path / "y.mea"
    p.write_bytes(b"MEA1" + struct.pack("<IIII", 2, 4, 2, 4) + payload)
    with pytest.raises(FormatError):
        load_measurement(p)
