# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Same signatures as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def convolve_direct(const double[::1] a, const double[::1] b, double dt):
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t j, m
    cdef double acc
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for j in range(n):
            acc = 0.0
            for m in range(j + 1):
                acc = acc + a[m] * b[j - m]
            o[j] = acc * dt
    return out


def cumulative_trapezoid(const double[::1] y, double dt):
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t j
    cdef double half = 0.5 * dt
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for j in range(1, n):
            o[j] = o[j - 1] + half * (y[j - 1] + y[j])
    return out


def gradient2(const double[::1] y, double dt):
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t j
    cdef double inv2 = 1.0 / (2.0 * dt)
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        o[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) * inv2
        for j in range(1, n - 1):
            o[j] = (y[j + 1] - y[j - 1]) * inv2
        o[n - 1] = (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) * inv2
    return out
