# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled assembly kernel. Arithmetic matches _kernels_py operation for
operation so both backends emit identical bits."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "compiled"

cdef unsigned char INTERIOR = 0


def corner_weights(double[:, ::1] pts, double[::1] lo, double[::1] inv_spacing,
                   long long[::1] shape, long long[::1] strides,
                   const unsigned char[::1] labels):
    """Multilinear cell corners and weights for a batch of points.

    Same contract as the fallback: returns (cols, weights, clean) with
    shapes (p, 2^n), (p, 2^n), (p,).
    """
    cdef Py_ssize_t npts = pts.shape[0]
    cdef int dim = <int>pts.shape[1]
    cdef int ncorner = 1 << dim
    cdef cnp.ndarray[cnp.int64_t, ndim=2] cols_arr = np.empty((npts, ncorner), dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] w_arr = np.empty((npts, ncorner), dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] clean_arr = np.empty(npts, dtype=np.uint8)
    cdef long long[:, ::1] cols = cols_arr
    cdef double[:, ::1] weights = w_arr
    cdef unsigned char[::1] clean = clean_arr

    cdef Py_ssize_t p
    cdef int axis, corner, bit
    cdef double s, f, w
    cdef long long c, flat
    cdef long long cell[3]
    cdef double t[3]
    cdef unsigned char ok

    with nogil:
        for p in range(npts):
            for axis in range(dim):
                s = (pts[p, axis] - lo[axis]) * inv_spacing[axis]
                c = <long long>s
                if s < 0:
                    c = c - 1  # floor for negative values
                if c < 0:
                    c = 0
                if c > shape[axis] - 2:
                    c = shape[axis] - 2
                f = s - <double>c
                if f < 0.0:
                    f = 0.0
                if f > 1.0:
                    f = 1.0
                cell[axis] = c
                t[axis] = f
            ok = 1
            for corner in range(ncorner):
                flat = 0
                w = 1.0
                for axis in range(dim):
                    bit = (corner >> axis) & 1
                    flat = flat + (cell[axis] + bit) * strides[axis]
                    if bit:
                        w = w * t[axis]
                    else:
                        w = w * (1.0 - t[axis])
                cols[p, corner] = flat
                weights[p, corner] = w
                if labels[flat] != INTERIOR:
                    ok = 0
            clean[p] = ok

    return cols_arr, w_arr, clean_arr.view(np.bool_)
