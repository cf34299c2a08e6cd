# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: compensated cumulative sums and AR(1) recursions.

Must stay behaviourally identical to kernels._fallback (up to rounding).
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def backend_name():
    return "cython"


def kahan_cumsum(cnp.float64_t[::1] terms):
    """Cumulative sums of ``terms`` with Neumaier compensation.

    Returns an array of length ``len(terms) + 1`` starting at 0.
    """
    cdef Py_ssize_t n = terms.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n + 1, dtype=np.float64)
    cdef double s = 0.0, comp = 0.0, t, x
    cdef Py_ssize_t i
    out[0] = 0.0
    for i in range(n):
        x = terms[i]
        t = s + x
        if abs(s) >= abs(x):
            comp += (s - t) + x
        else:
            comp += (x - t) + s
        s = t
        out[i + 1] = s + comp
    return out


def ar1_recursion(double a, cnp.float64_t[::1] b, double x0):
    """Linear recursion ``x[i+1] = a * x[i] + b[i]``, returned with x0 prepended."""
    cdef Py_ssize_t n = b.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n + 1, dtype=np.float64)
    cdef double x = x0
    cdef Py_ssize_t i
    out[0] = x
    for i in range(n):
        x = a * x + b[i]
        out[i + 1] = x
    return out
