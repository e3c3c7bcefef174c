"""Per-voxel separable 3D filters for local-mean estimation.

Each voxel carries three length-q tap vectors (row, column, spectral)
whose tensor product is its 3D smoothing kernel; storing the factors
keeps the field at 3*q coefficients per voxel instead of q^3. Taps are
range-similarity weights, so averaging is suppressed across intensity
edges while flat regions receive near-uniform kernels.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .cube import HsiCube
from .errors import ParameterError, ShapeError


class SeparableFilterField:
    """Factorized per-voxel kernels: row/col/spec tap arrays of shape (L, H, W, q)."""

    __slots__ = ("row", "col", "spec")

    def __init__(self, row, col, spec):
        if row.shape != col.shape or row.shape != spec.shape:
            raise ShapeError("filter factor shapes disagree")
        if row.ndim != 4:
            raise ShapeError(f"filter factors must be 4-d, got {row.ndim}-d")
        q = row.shape[-1]
        if q % 2 == 0 or q < 1:
            raise ParameterError(f"filter length must be odd and >= 1, got {q}")
        self.row = row
        self.col = col
        self.spec = spec

    @property
    def q(self) -> int:
        return self.row.shape[-1]

    @property
    def field_shape(self):
        return self.row.shape[:3]

    def coefficient_count(self) -> int:
        """Total stored coefficients; 3 * q per voxel by construction."""
        return self.row.size + self.col.size + self.spec.size


def build_filters(x: HsiCube, q: int = 7, h: float = 0.1) -> SeparableFilterField:
    """Derive the similarity filter field from the current cube.

    Tap j at offset o = j - q//2 along an axis is weighted by
    exp(-(x_i - x_{i+o})^2 / (2 h^2)) with replicate padding, then each
    tap vector is normalized to sum 1.
    """
    if h <= 0:
        raise ParameterError(f"bandwidth h must be > 0, got {h}")
    if q < 1 or q % 2 == 0:
        raise ParameterError(f"filter length must be odd and >= 1, got {q}")
    if q > 2 * min(x.shape) - 1:
        raise ParameterError(
            f"filter length {q} exceeds 2*min(dims)-1 = {2 * min(x.shape) - 1}")
    row, col, spec = kernels.similarity_filters(x.data, q, float(h))
    return SeparableFilterField(row, col, spec)


def local_mean(x: HsiCube, field: SeparableFilterField) -> np.ndarray:
    """Apply each voxel's factorized kernel to its q^3 neighborhood.

    Contracts the neighborhood with the voxel's own row, column and
    spectral taps in sequence (replicate padding), which equals applying
    the composed 3D kernel directly.
    """
    if field.field_shape != x.shape:
        raise ShapeError(
            f"filter field {field.field_shape} does not match cube {x.shape}")
    return kernels.separable_local_mean(x.data, field.row, field.col, field.spec)


def compose_full(row: np.ndarray, col: np.ndarray, spec: np.ndarray) -> np.ndarray:
    """Tensor product of three 1D taps: K[a, b, d] = row[a]*col[b]*spec[d]."""
    row = np.asarray(row, dtype=np.float64)
    col = np.asarray(col, dtype=np.float64)
    spec = np.asarray(spec, dtype=np.float64)
    if row.ndim != 1 or row.shape != col.shape or row.shape != spec.shape:
        raise ShapeError("tap vectors must be 1-d and of equal length")
    return np.einsum("a,b,d->abd", row, col, spec)


def local_mean_full(x: HsiCube, field: SeparableFilterField) -> np.ndarray:
    """Reference path: compose each voxel's full q^3 kernel and apply it directly.

    Quadratically slower than local_mean; kept as the independent check of
    the factorized application and for debugging. Never used by the solver.
    """
    if field.field_shape != x.shape:
        raise ShapeError(
            f"filter field {field.field_shape} does not match cube {x.shape}")
    L, H, W = x.shape
    q = field.q
    m = q // 2
    pad = np.pad(x.data.astype(np.float64), m, mode="edge")
    out = np.empty((L, H, W), dtype=np.float64)
    for l in range(L):
        for r in range(H):
            for c in range(W):
                k = compose_full(field.row[l, r, c], field.col[l, r, c],
                                 field.spec[l, r, c])
                hood = pad[l:l + q, r:r + q, c:c + q]
                # kernel axes are (row, col, spec); neighborhood is (spec, row, col)
                out[l, r, c] = np.einsum("abd,dab->", k, hood)
    return out.astype(np.float32)
