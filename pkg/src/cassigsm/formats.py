"""Deterministic binary file formats HSC1 / MSK1 / MEA1.

All three share the layout: 4-byte ASCII magic, unsigned 32-bit
little-endian header integers, then IEEE-754 float32 little-endian
payload. Cube payloads are band-major planar, exactly the C order of the
in-memory (L, H, W) array, so round-trips are bit-exact.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .cube import HsiCube, Mask2D, Measurement
from .errors import (BadMagicError, DimensionOverflowError, FormatError,
                     TruncatedPayloadError)

CUBE_MAGIC = b"HSC1"
MASK_MAGIC = b"MSK1"
MEAS_MAGIC = b"MEA1"

# refuse to allocate payloads above 2^31 elements (8 GiB of float32)
MAX_ELEMENTS = 2 ** 31
_U32_MAX = 2 ** 32 - 1


def _check_dims(*dims):
    n = 1
    for d in dims:
        if d < 1:
            raise DimensionOverflowError(f"dimension {d} out of range")
        n *= d
    if n > MAX_ELEMENTS:
        raise DimensionOverflowError(f"payload of {n} elements exceeds limit")
    return n


def _read_header(raw: bytes, magic: bytes, n_ints: int):
    need = 4 + 4 * n_ints
    if len(raw) < 4:
        raise TruncatedPayloadError("file shorter than magic tag")
    if raw[:4] != magic:
        raise BadMagicError(f"bad magic {raw[:4]!r}, expected {magic!r}")
    if len(raw) < need:
        raise TruncatedPayloadError(f"header needs {need} bytes, file has {len(raw)}")
    return struct.unpack("<" + "I" * n_ints, raw[4:need]), raw[need:]


def _read_payload(body: bytes, count: int):
    want = 4 * count
    if len(body) != want:
        raise TruncatedPayloadError(
            f"payload has {len(body)} bytes, header promises {want}")
    arr = np.frombuffer(body, dtype="<f4").copy()
    if not np.isfinite(arr).all():
        raise FormatError("payload contains non-finite values")
    return arr


def _pack(magic: bytes, ints, arr: np.ndarray) -> bytes:
    for v in ints:
        if v > _U32_MAX:
            raise DimensionOverflowError(f"dimension {v} exceeds u32")
    head = magic + struct.pack("<" + "I" * len(ints), *ints)
    return head + np.ascontiguousarray(arr, dtype="<f4").tobytes()


def save_cube(cube: HsiCube, path) -> None:
    Path(path).write_bytes(
        _pack(CUBE_MAGIC, (cube.height, cube.width, cube.bands), cube.data))


def load_cube(path, peak: float = 1.0) -> HsiCube:
    (dims, body) = _read_header(Path(path).read_bytes(), CUBE_MAGIC, 3)
    h, w, l = dims
    n = _check_dims(h, w, l)
    arr = _read_payload(body, n).reshape(l, h, w)
    return HsiCube(arr, peak=peak, clamp=True)


def save_mask(mask: Mask2D, path) -> None:
    Path(path).write_bytes(_pack(MASK_MAGIC, (mask.height, mask.width), mask.data))


def load_mask(path) -> Mask2D:
    (dims, body) = _read_header(Path(path).read_bytes(), MASK_MAGIC, 2)
    h, w = dims
    n = _check_dims(h, w)
    arr = _read_payload(body, n).reshape(h, w)
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise FormatError("mask payload outside [0, 1]")
    return Mask2D(arr)


def save_measurement(meas: Measurement, path) -> None:
    Path(path).write_bytes(
        _pack(MEAS_MAGIC, (meas.height, meas.width, meas.step, meas.bands),
              meas.data))


def load_measurement(path) -> Measurement:
    (dims, body) = _read_header(Path(path).read_bytes(), MEAS_MAGIC, 4)
    h, wm, step, bands = dims
    n = _check_dims(h, wm)
    if bands < 1:
        raise DimensionOverflowError(f"band count {bands} out of range")
    if wm <= step * (bands - 1):
        raise FormatError(
            f"measurement width {wm} inconsistent with step={step}, bands={bands}")
    arr = _read_payload(body, n).reshape(h, wm)
    return Measurement(arr, step=step, bands=bands)
