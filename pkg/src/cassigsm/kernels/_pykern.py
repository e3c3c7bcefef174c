"""Pure-NumPy implementations of the hot kernels.

Array conventions (shared with the compiled backend):
  cube  -- (L, H, W) float32, C-contiguous, band-major planar
  mask  -- (H, W) float32, transmittance in [0, 1]
  meas  -- (H, Wm) float32 with Wm = W + step * (L - 1)
  filters -- (L, H, W, q) float32, one length-q tap vector per voxel

Per-voxel reduction order is fixed (ascending tap / band index) so that
results do not depend on how work is scheduled.
"""

import numpy as np

BACKEND_NAME = "python"


def forward_shift_sum(mask, cube, step):
    """Modulate the cube by the mask, shift band l by step*l, sum bands.

    Accumulates in float64: the L-term per-pixel sums would lose about
    two digits at float32.
    """
    L, H, W = cube.shape
    wm = W + step * (L - 1)
    acc = np.zeros((H, wm), dtype=np.float64)
    mask64 = mask.astype(np.float64)
    for l in range(L):
        off = step * l
        acc[:, off:off + W] += mask64 * cube[l]
    return acc.astype(np.float32)


def adjoint_extract(mask, meas, bands, step):
    """Exact transpose of forward_shift_sum: mask-weighted shifted windows."""
    H, W = mask.shape
    out = np.empty((bands, H, W), dtype=np.float32)
    for l in range(bands):
        off = step * l
        out[l] = mask * meas[:, off:off + W]
    return out


def similarity_filters(cube, q, h):
    """Range-similarity 1D filters along rows, columns and bands.

    Tap j (offset o = j - q//2) on axis a gets weight
    exp(-(x[i] - x[i + o*e_a])^2 / (2 h^2)), with replicate padding at the
    borders, then each tap vector is normalized to sum 1.

    Returns (row_f, col_f, spec_f), each (L, H, W, q) float32.
    """
    L, H, W = cube.shape
    m = q // 2
    inv2h2 = 1.0 / (2.0 * h * h)
    x = cube.astype(np.float64)
    fields = []
    for axis, n in ((1, H), (2, W), (0, L)):
        taps = np.empty((q,) + cube.shape, dtype=np.float64)
        for j in range(q):
            idx = np.clip(np.arange(n) + (j - m), 0, n - 1)
            diff = x - np.take(x, idx, axis=axis)
            taps[j] = np.exp(-(diff * diff) * inv2h2)
        taps /= taps.sum(axis=0, keepdims=True)
        fields.append(np.moveaxis(taps, 0, -1).astype(np.float32))
    return fields[0], fields[1], fields[2]


def separable_local_mean(cube, row_f, col_f, spec_f):
    """Per-voxel factorized 3D filtering: contract rows, then columns, then bands.

    Every voxel i is averaged over its own q*q*q neighborhood using its own
    three tap vectors; the contraction order (row, column, spectral) matches
    the compiled kernel so both backends accumulate identically.
    """
    L, H, W = cube.shape
    q = row_f.shape[-1]
    m = q // 2
    pad = np.pad(cube.astype(np.float64), m, mode="edge")
    rf = row_f.astype(np.float64)
    cf = col_f.astype(np.float64)
    sf = spec_f.astype(np.float64)
    # after row+column contraction, one volume per spectral tap
    td = np.zeros((q, L, H, W), dtype=np.float64)
    for b in range(q):
        for d in range(q):
            acc = np.zeros((L, H, W), dtype=np.float64)
            for a in range(q):
                acc += rf[..., a] * pad[d:d + L, a:a + H, b:b + W]
            td[d] += cf[..., b] * acc
    u = np.zeros((L, H, W), dtype=np.float64)
    for d in range(q):
        u += sf[..., d] * td[d]
    return u.astype(np.float32)
