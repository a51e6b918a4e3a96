# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled single-pass kernels; see ``_pykernels`` for the reference versions."""

import numpy as np


def trigger_sums(const double[::1] y, const double[::1] x, const signed char[::1] t):
    cdef Py_ssize_t i, n = y.shape[0]
    cdef double st = 0, sx = 0, sxx = 0, stx = 0, stxx = 0
    cdef double sy = 0, sty = 0, sxy = 0, stxy = 0, syy = 0
    cdef double yi, xi, xx, xy
    if x.shape[0] != n or t.shape[0] != n:
        raise ValueError("column length mismatch")
    with nogil:
        for i in range(n):
            yi = y[i]
            xi = x[i]
            xx = xi * xi
            xy = xi * yi
            sx += xi
            sxx += xx
            sy += yi
            sxy += xy
            syy += yi * yi
            if t[i]:
                st += 1
                stx += xi
                stxx += xx
                sty += yi
                stxy += xy
    return np.array([n, st, sx, sxx, stx, stxx, sy, sty, sxy, stxy, syy])


def ssr_trigger(const double[::1] y, const double[::1] x, const signed char[::1] t,
                double b0, double b1, double b2):
    cdef Py_ssize_t i, n = y.shape[0]
    cdef double acc = 0, e
    with nogil:
        for i in range(n):
            e = y[i] - b0 - (b1 + b2 * t[i]) * x[i]
            acc += e * e
    return acc


def ssr_baseline(const double[::1] y, const signed char[::1] t, double a0, double a1):
    cdef Py_ssize_t i, n = y.shape[0]
    cdef double acc = 0, e
    with nogil:
        for i in range(n):
            e = y[i] - a0 - a1 * t[i]
            acc += e * e
    return acc
