# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled row-wise hot kernels.

Mirrors pykernels: top-k index selection agrees exactly (same tie rule),
float kernels agree to within float64 rounding (summation order differs).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, sqrt, INFINITY

cnp.import_array()

NAME = "cython"


def softmax_rows(scores, double tau):
    cdef double[:, ::1] s = np.ascontiguousarray(scores, dtype=np.float64)
    cdef Py_ssize_t rows = s.shape[0], cols = s.shape[1]
    out_arr = np.empty((rows, cols), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t r, c
    cdef double m, total, z
    for r in range(rows):
        m = -INFINITY
        for c in range(cols):
            z = s[r, c] / tau
            if z > m:
                m = z
        total = 0.0
        for c in range(cols):
            z = exp(s[r, c] / tau - m)
            out[r, c] = z
            total += z
        for c in range(cols):
            out[r, c] /= total
    return out_arr


def log_softmax_rows(scores, double tau):
    cdef double[:, ::1] s = np.ascontiguousarray(scores, dtype=np.float64)
    cdef Py_ssize_t rows = s.shape[0], cols = s.shape[1]
    out_arr = np.empty((rows, cols), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t r, c
    cdef double m, total, lse
    for r in range(rows):
        m = -INFINITY
        for c in range(cols):
            if s[r, c] / tau > m:
                m = s[r, c] / tau
        total = 0.0
        for c in range(cols):
            total += exp(s[r, c] / tau - m)
        lse = m + log(total)
        for c in range(cols):
            out[r, c] = s[r, c] / tau - lse
    return out_arr


def entropy_rows(p):
    cdef double[:, ::1] pm = np.ascontiguousarray(p, dtype=np.float64)
    cdef Py_ssize_t rows = pm.shape[0], cols = pm.shape[1]
    out_arr = np.empty(rows, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t r, c
    cdef double h
    for r in range(rows):
        h = 0.0
        for c in range(cols):
            if pm[r, c] > 0.0:
                h -= pm[r, c] * log(pm[r, c])
        out[r] = h
    return out_arr


def ema_update_row(double[:, ::1] bank, Py_ssize_t i, v, double eta):
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t dim = bank.shape[1], d
    tmp_arr = np.empty(dim, dtype=np.float64)
    cdef double[::1] tmp = tmp_arr
    cdef double total = 0.0, x
    for d in range(dim):
        x = (1.0 - eta) * bank[i, d] + eta * vv[d]
        tmp[d] = x
        total += x * x
    total = sqrt(total)
    if total > 0.0:
        for d in range(dim):
            bank[i, d] = tmp[d] / total
    return total


def topk_desc_rows(sims, Py_ssize_t k, exclude=None):
    cdef double[:, ::1] s = np.ascontiguousarray(sims, dtype=np.float64)
    cdef Py_ssize_t rows = s.shape[0], cols = s.shape[1]
    cdef bint has_excl = exclude is not None
    cdef Py_ssize_t n_eligible = cols - (1 if has_excl else 0)
    if k < 1 or k > n_eligible:
        raise ValueError(f"k={k} out of range for {n_eligible} eligible columns")
    cdef cnp.int64_t[::1] excl
    if has_excl:
        excl = np.ascontiguousarray(exclude, dtype=np.int64)
    out_arr = np.empty((rows, k), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    best_v_arr = np.empty(k, dtype=np.float64)
    best_i_arr = np.empty(k, dtype=np.int64)
    cdef double[::1] bv = best_v_arr
    cdef cnp.int64_t[::1] bi = best_i_arr
    cdef Py_ssize_t r, j, count, p
    cdef double x
    for r in range(rows):
        count = 0
        for j in range(cols):
            if has_excl and j == <Py_ssize_t> excl[r]:
                continue
            x = s[r, j]
            if count < k:
                p = count
                while p > 0 and bv[p - 1] < x:
                    bv[p] = bv[p - 1]
                    bi[p] = bi[p - 1]
                    p -= 1
                bv[p] = x
                bi[p] = j
                count += 1
            elif x > bv[k - 1]:
                p = k - 1
                while p > 0 and bv[p - 1] < x:
                    bv[p] = bv[p - 1]
                    bi[p] = bi[p - 1]
                    p -= 1
                bv[p] = x
                bi[p] = j
        for p in range(k):
            out[r, p] = bi[p]
    return out_arr
