"""Core data types: spectral cubes, coded masks, sensor measurements.

All payloads are float32. Cubes use band-major planar layout: a cube is a
C-contiguous (L, H, W) array, so flattening gives index(l, r, c) =
l*H*W + r*W + c and each band is a contiguous H x W plane. Instances are
immutable after construction and safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float32)
    a.setflags(write=False)
    return a


class HsiCube:
    """A 3D spectral data cube of shape (bands, height, width).

    Values are unitless radiance. On ingest (``clamp=True``, used by file
    loading and scene generation) values are clamped to [0, peak]; solver
    intermediates skip the clamp but must stay finite.
    """

    __slots__ = ("data", "peak")

    def __init__(self, data, peak: float = 1.0, clamp: bool = False):
        arr = np.asarray(data, dtype=np.float32)
        if arr.ndim != 3:
            raise ShapeError(f"cube data must be 3-d (L, H, W), got {arr.ndim}-d")
        if arr.shape[0] < 1 or arr.shape[1] < 1 or arr.shape[2] < 1:
            raise ShapeError(f"cube dims must be positive, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ParameterError("cube data contains NaN or Inf")
        if not peak > 0:
            raise ParameterError(f"peak must be > 0, got {peak}")
        if clamp:
            arr = np.clip(arr, 0.0, peak)
        self.data = _freeze(arr)
        self.peak = float(peak)

    @property
    def bands(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self):
        return self.data.shape

    def __eq__(self, other):
        if not isinstance(other, HsiCube):
            return NotImplemented
        return self.peak == other.peak and np.array_equal(self.data, other.data)

    def __repr__(self):
        return f"HsiCube(bands={self.bands}, height={self.height}, width={self.width}, peak={self.peak})"


class Mask2D:
    """Coded aperture: per-pixel transmittance in [0, 1]."""

    __slots__ = ("data",)

    def __init__(self, data):
        arr = np.asarray(data, dtype=np.float32)
        if arr.ndim != 2:
            raise ShapeError(f"mask data must be 2-d (H, W), got {arr.ndim}-d")
        if not np.isfinite(arr).all():
            raise ParameterError("mask data contains NaN or Inf")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ParameterError("mask transmittance must lie in [0, 1]")
        self.data = _freeze(arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Mask2D):
            return NotImplemented
        return np.array_equal(self.data, other.data)

    def __repr__(self):
        return f"Mask2D(height={self.height}, width={self.width})"


class Measurement:
    """A 2D sensor image of width W + step*(L-1) for dispersion step s."""

    __slots__ = ("data", "step", "bands")

    def __init__(self, data, step: int, bands: int):
        arr = np.asarray(data, dtype=np.float32)
        if arr.ndim != 2:
            raise ShapeError(f"measurement data must be 2-d (H, Wm), got {arr.ndim}-d")
        if not np.isfinite(arr).all():
            raise ParameterError("measurement data contains NaN or Inf")
        if step < 0:
            raise ParameterError(f"dispersion step must be >= 0, got {step}")
        if bands < 1:
            raise ParameterError(f"band count must be >= 1, got {bands}")
        if arr.shape[1] <= step * (bands - 1):
            raise ShapeError(
                f"measurement width {arr.shape[1]} too small for step={step}, bands={bands}")
        self.data = _freeze(arr)
        self.step = int(step)
        self.bands = int(bands)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def source_width(self) -> int:
        """Width W of the cube this measurement was produced from."""
        return self.width - self.step * (self.bands - 1)

    def __eq__(self, other):
        if not isinstance(other, Measurement):
            return NotImplemented
        return (self.step == other.step and self.bands == other.bands
                and np.array_equal(self.data, other.data))

    def __repr__(self):
        return (f"Measurement(height={self.height}, width={self.width}, "
                f"step={self.step}, bands={self.bands})")


@dataclass(frozen=True)
class SceneSpec:
    """Recipe for a deterministic synthetic scene (stand-in for lab data)."""

    height: int
    width: int
    bands: int
    blobs: int = 6
    seed: int = 0
    spectral_smoothness: float = 2.0
    peak: float = 1.0


def generate_scene(spec: SceneSpec) -> HsiCube:
    """Render a SceneSpec: Gaussian spatial blobs with smooth spectral curves.

    Each blob has a random center, width and amplitude, and a per-blob
    spectral envelope built from a low-order cosine series (the smoothness
    value caps the highest harmonic). The result is normalized to
    [0, peak]. Identical specs produce bit-identical cubes.
    """
    H, W, L = spec.height, spec.width, spec.bands
    if H < 1 or W < 1 or L < 1:
        raise ShapeError(f"scene dims must be positive, got {(H, W, L)}")
    if spec.blobs < 0:
        raise ParameterError(f"blob count must be >= 0, got {spec.blobs}")
    rng = np.random.default_rng(spec.seed)
    acc = np.zeros((L, H, W), dtype=np.float64)
    rr, cc = np.mgrid[0:H, 0:W].astype(np.float64)
    lam = np.arange(L, dtype=np.float64) / max(L - 1, 1)
    n_terms = max(1, int(round(spec.spectral_smoothness)) + 1)
    for _ in range(spec.blobs):
        cy = rng.uniform(0, H)
        cx = rng.uniform(0, W)
        sig = rng.uniform(0.05, 0.25) * min(H, W)
        amp = rng.uniform(0.3, 1.0)
        coef = rng.normal(size=n_terms)
        curve = np.zeros(L, dtype=np.float64)
        for k in range(n_terms):
            curve += coef[k] * np.cos(np.pi * k * lam)
        span = curve.max() - curve.min()
        if span > 0:
            env = 0.2 + 0.8 * (curve - curve.min()) / span
        else:
            env = np.full(L, 0.2)
        spatial = np.exp(-((rr - cy) ** 2 + (cc - cx) ** 2) / (2.0 * sig * sig))
        acc += amp * env[:, None, None] * spatial[None, :, :]
    peak_val = acc.max()
    if peak_val > 0:
        acc *= spec.peak / peak_val
    return HsiCube(acc.astype(np.float32), peak=spec.peak, clamp=True)


def extract_patch(cube: HsiCube, origin, size) -> HsiCube:
    """Copy an (h, w) spatial patch at (row, col); all bands are retained."""
    r0, c0 = origin
    h, w = size
    if h < 1 or w < 1:
        raise ShapeError(f"patch size must be positive, got {(h, w)}")
    if r0 < 0 or c0 < 0 or r0 + h > cube.height or c0 + w > cube.width:
        raise ShapeError(
            f"patch {(h, w)} at {(r0, c0)} exceeds cube bounds "
            f"{(cube.height, cube.width)}")
    return HsiCube(cube.data[:, r0:r0 + h, c0:c0 + w].copy(), peak=cube.peak)


def random_mask(height: int, width: int, density: float = 0.5, seed: int = 0,
                kind: str = "binary") -> Mask2D:
    """Seeded random coded aperture: 'binary' Bernoulli(density) or 'uniform'."""
    if not 0.0 <= density <= 1.0:
        raise ParameterError(f"density must lie in [0, 1], got {density}")
    rng = np.random.default_rng(seed)
    if kind == "binary":
        data = (rng.random((height, width)) < density).astype(np.float32)
    elif kind == "uniform":
        data = rng.random((height, width)).astype(np.float32)
    else:
        raise ParameterError(f"unknown mask kind {kind!r}")
    return Mask2D(data)
