# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# cython: language_level=3
"""Compiled implementations of the hot kernels.

Mirrors _pykern exactly: same array conventions, same per-voxel reduction
order (ascending tap / band index), float64 accumulation, float32 output.
OpenMP-parallel over image rows; each output voxel is reduced sequentially
by one thread, so results are independent of the thread count.
"""

import numpy as np

from cython.parallel cimport prange
from libc.math cimport exp
from libc.stdlib cimport free, malloc

BACKEND_NAME = "cython"


cdef inline Py_ssize_t _clamp(Py_ssize_t v, Py_ssize_t hi) noexcept nogil:
    if v < 0:
        return 0
    if v > hi:
        return hi
    return v


def forward_shift_sum(const float[:, ::1] mask, const float[:, :, ::1] cube,
                      Py_ssize_t step):
    cdef Py_ssize_t L = cube.shape[0], H = cube.shape[1], W = cube.shape[2]
    cdef Py_ssize_t wm = W + step * (L - 1)
    acc_arr = np.zeros((H, wm), dtype=np.float64)
    cdef double[:, ::1] acc = acc_arr
    cdef Py_ssize_t r, l, c, off
    with nogil:
        for r in prange(H, schedule="static"):
            for l in range(L):
                off = step * l
                for c in range(W):
                    acc[r, off + c] += (<double> mask[r, c]) * (<double> cube[l, r, c])
    return acc_arr.astype(np.float32)


def adjoint_extract(const float[:, ::1] mask, const float[:, ::1] meas,
                    Py_ssize_t bands, Py_ssize_t step):
    cdef Py_ssize_t H = mask.shape[0], W = mask.shape[1]
    out_arr = np.empty((bands, H, W), dtype=np.float32)
    cdef float[:, :, ::1] out = out_arr
    cdef Py_ssize_t r, l, c, off
    with nogil:
        for r in prange(H, schedule="static"):
            for l in range(bands):
                off = step * l
                for c in range(W):
                    out[l, r, c] = mask[r, c] * meas[r, off + c]
    return out_arr


def similarity_filters(const float[:, :, ::1] cube, Py_ssize_t q, double h):
    cdef Py_ssize_t L = cube.shape[0], H = cube.shape[1], W = cube.shape[2]
    cdef Py_ssize_t m = q // 2
    cdef double inv2h2 = 1.0 / (2.0 * h * h)
    row_arr = np.empty((L, H, W, q), dtype=np.float32)
    col_arr = np.empty((L, H, W, q), dtype=np.float32)
    spec_arr = np.empty((L, H, W, q), dtype=np.float32)
    cdef float[:, :, :, ::1] rf = row_arr, cf = col_arr, sf = spec_arr
    cdef Py_ssize_t r, l, c, j
    cdef double centre, d, wsum
    cdef double* w
    with nogil:
        for r in prange(H, schedule="static"):
            w = <double*> malloc(q * sizeof(double))
            for l in range(L):
                for c in range(W):
                    centre = cube[l, r, c]
                    # rows
                    wsum = 0.0
                    for j in range(q):
                        d = centre - cube[l, _clamp(r + j - m, H - 1), c]
                        w[j] = exp(-(d * d) * inv2h2)
                        wsum = wsum + w[j]
                    for j in range(q):
                        rf[l, r, c, j] = <float> (w[j] / wsum)
                    # columns
                    wsum = 0.0
                    for j in range(q):
                        d = centre - cube[l, r, _clamp(c + j - m, W - 1)]
                        w[j] = exp(-(d * d) * inv2h2)
                        wsum = wsum + w[j]
                    for j in range(q):
                        cf[l, r, c, j] = <float> (w[j] / wsum)
                    # bands
                    wsum = 0.0
                    for j in range(q):
                        d = centre - cube[_clamp(l + j - m, L - 1), r, c]
                        w[j] = exp(-(d * d) * inv2h2)
                        wsum = wsum + w[j]
                    for j in range(q):
                        sf[l, r, c, j] = <float> (w[j] / wsum)
            free(w)
    return row_arr, col_arr, spec_arr


def separable_local_mean(const float[:, :, ::1] cube,
                         const float[:, :, :, ::1] row_f,
                         const float[:, :, :, ::1] col_f,
                         const float[:, :, :, ::1] spec_f):
    cdef Py_ssize_t L = cube.shape[0], H = cube.shape[1], W = cube.shape[2]
    cdef Py_ssize_t q = row_f.shape[3]
    cdef Py_ssize_t m = q // 2
    out_arr = np.empty((L, H, W), dtype=np.float32)
    cdef float[:, :, ::1] out = out_arr
    cdef Py_ssize_t r, l, c, a, b, d, rr
    cdef double s, u
    cdef double* tmp2  # row-contracted neighborhood, indexed [b * q + d]
    cdef double* tmp1  # column-contracted, indexed [d]
    with nogil:
        for r in prange(H, schedule="static"):
            tmp2 = <double*> malloc(q * q * sizeof(double))
            tmp1 = <double*> malloc(q * sizeof(double))
            for l in range(L):
                for c in range(W):
                    for b in range(q):
                        for d in range(q):
                            s = 0.0
                            for a in range(q):
                                s = s + (<double> row_f[l, r, c, a]) * \
                                    (<double> cube[_clamp(l + d - m, L - 1),
                                                   _clamp(r + a - m, H - 1),
                                                   _clamp(c + b - m, W - 1)])
                            tmp2[b * q + d] = s
                    for d in range(q):
                        s = 0.0
                        for b in range(q):
                            s = s + (<double> col_f[l, r, c, b]) * tmp2[b * q + d]
                        tmp1[d] = s
                    u = 0.0
                    for d in range(q):
                        u = u + (<double> spec_f[l, r, c, d]) * tmp1[d]
                    out[l, r, c] = <float> u
            free(tmp2)
            free(tmp1)
    return out_arr
