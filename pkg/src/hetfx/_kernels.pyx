# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

Same contracts as :mod:`hetfx._fallback`; see there for the semantics.
Every parallel loop gives each output element to exactly one thread and
sums in a fixed order, so results do not depend on the thread count.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport exp, fabs, sqrt

cnp.import_array()

cdef double INV_SQRT_2PI = 0.3989422804014327


def gaussian_weights(const double[::1] x_eval, const double[::1] x_data, double h,
                     bint exclude_diag=False, int threads=1):
    cdef Py_ssize_t m = x_eval.shape[0], n = x_data.shape[0], i, j
    cdef double inv_h = 1.0 / h, u
    out_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in prange(m, nogil=True, num_threads=threads, schedule="static"):
        for j in range(n):
            u = (x_data[j] - x_eval[i]) * inv_h
            out[i, j] = INV_SQRT_2PI * exp(-0.5 * u * u)
        if exclude_diag and i < n:
            out[i, i] = 0.0
    return out_arr


def prefix_sup(const double[:, ::1] U, const double[:, ::1] V,
               const Py_ssize_t[::1] checkpoints, bint reset, int threads=1):
    cdef Py_ssize_t B = U.shape[0], n = U.shape[1], W = V.shape[1]
    cdef Py_ssize_t K = checkpoints.shape[0]
    cdef Py_ssize_t b, i, k, w, pos, stop
    cdef double u, best, a
    cdef double[:, ::1] acc
    if V.shape[0] != n:
        raise ValueError("U and V disagree on the number of records")
    out_arr = np.zeros(B, dtype=np.float64)
    cdef double[::1] out = out_arr
    acc_arr = np.zeros((max(B, 1), max(W, 1)), dtype=np.float64)
    acc = acc_arr
    for b in prange(B, nogil=True, num_threads=threads, schedule="static"):
        best = 0.0
        pos = 0
        for w in range(W):
            acc[b, w] = 0.0
        for k in range(K):
            stop = checkpoints[k]
            for i in range(pos, stop):
                u = U[b, i]
                if u != 0.0:
                    for w in range(W):
                        acc[b, w] = acc[b, w] + u * V[i, w]
            pos = stop
            for w in range(W):
                a = fabs(acc[b, w])
                if a > best:
                    best = a
                if reset:
                    acc[b, w] = 0.0
        out[b] = best
    return out_arr


def lambda_gap_sup(const double[::1] w_hat, const double[::1] c,
                   const double[::1] w_points, const Py_ssize_t[::1] checkpoints,
                   int threads=1):
    cdef Py_ssize_t n = w_hat.shape[0], W = w_points.shape[0], K = checkpoints.shape[0]
    cdef Py_ssize_t i, k, j, pos, stop
    cdef double acc, t, best_j
    best_arr = np.zeros(max(W, 1), dtype=np.float64)
    cdef double[::1] best = best_arr
    for j in prange(W, nogil=True, num_threads=threads, schedule="static"):
        acc = 0.0
        pos = 0
        best_j = 0.0
        for k in range(K):
            stop = checkpoints[k]
            for i in range(pos, stop):
                t = w_hat[i] - w_points[j]
                if t < 0.0:
                    acc = acc + c[i] * (-t)
            pos = stop
            if fabs(acc) > best_j:
                best_j = fabs(acc)
        best[j] = best_j
    return float(best_arr.max()) if W > 0 else 0.0
