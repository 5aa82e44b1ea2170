# cython: boundscheck=False, wraparound=False, cdivision=True
"""Fused row-wise softmax / log-sum-exp kernel.

The max-shift is applied per row so arbitrarily large logits never
overflow. This is the single hot primitive of the whole package: every
loss, risk estimator and gradient is assembled from its two outputs.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()


def softmax_lse(double[:, ::1] scores):
    """Return (softmax rows, log-sum-exp per row) for an n x K score matrix."""
    cdef Py_ssize_t n = scores.shape[0]
    cdef Py_ssize_t k = scores.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] probs = np.empty((n, k), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lse = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] p = probs
    cdef double[::1] z = lse
    cdef Py_ssize_t i, j
    cdef double m, s, v

    for i in range(n):
        m = scores[i, 0]
        for j in range(1, k):
            if scores[i, j] > m:
                m = scores[i, j]
        s = 0.0
        for j in range(k):
            v = exp(scores[i, j] - m)
            p[i, j] = v
            s += v
        z[i] = m + log(s)
        for j in range(k):
            p[i, j] /= s
    return probs, lse
