# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: signed CSR edge-mass accumulation and the linear
classifier fit. Must stay semantically in lockstep with pykernels.py."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()

NAME = "cython"


def signed_row_weights(cnp.int64_t[::1] indptr,
                       cnp.int64_t[::1] indices,
                       cnp.float64_t[::1] data,
                       cnp.int8_t[::1] src_stance,
                       Py_ssize_t n_rows):
    """Single fused pass over the CSR arrays; see pykernels for semantics.

    Branchless: stance comparisons are hoisted into 0/1 indicator arrays so
    the inner loop is three fused multiply-adds per stored entry.
    """
    cdef Py_ssize_t n_cols = src_stance.shape[0]
    src = np.asarray(src_stance)
    pos_ind_arr = (src == 1).astype(np.float64)
    neg_ind_arr = (src == -1).astype(np.float64)
    cdef cnp.float64_t[::1] pos_ind = pos_ind_arr
    cdef cnp.float64_t[::1] neg_ind = neg_ind_arr
    pos_arr = np.zeros(n_rows, dtype=np.float64)
    neg_arr = np.zeros(n_rows, dtype=np.float64)
    tot_arr = np.zeros(n_rows, dtype=np.float64)
    cdef cnp.float64_t[::1] pos = pos_arr
    cdef cnp.float64_t[::1] neg = neg_arr
    cdef cnp.float64_t[::1] tot = tot_arr
    cdef Py_ssize_t i, k, j
    cdef double p, n, t, v
    for i in range(n_rows):
        p = 0.0
        n = 0.0
        t = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            v = data[k]
            j = indices[k]
            t += v
            p += v * pos_ind[j]
            n += v * neg_ind[j]
        pos[i] = p
        neg[i] = n
        tot[i] = t
    return pos_arr, neg_arr, tot_arr


def logreg_fit(cnp.int64_t[::1] indptr,
               cnp.int64_t[::1] indices,
               cnp.float64_t[::1] data,
               cnp.float64_t[::1] y,
               cnp.float64_t[::1] sample_weight,
               double l2,
               double lr,
               int epochs,
               Py_ssize_t n_features):
    """Full-batch GD on weighted mean logistic loss plus L2 (zero init)."""
    w_arr = np.zeros(n_features, dtype=np.float64)
    g_arr = np.zeros(n_features, dtype=np.float64)
    cdef cnp.float64_t[::1] w = w_arr
    cdef cnp.float64_t[::1] g = g_arr
    cdef Py_ssize_t n_rows = y.shape[0]
    cdef Py_ssize_t i, k, j
    cdef int epoch
    cdef double b = 0.0, gb, s, m, sig, c, z, total = 0.0
    for i in range(n_rows):
        total += sample_weight[i]
    for epoch in range(epochs):
        for j in range(n_features):
            g[j] = 0.0
        gb = 0.0
        for i in range(n_rows):
            s = b
            for k in range(indptr[i], indptr[i + 1]):
                s += data[k] * w[indices[k]]
            m = y[i] * s
            # numerically stable sigmoid(-m)
            if m > 0:
                z = exp(-m)
                sig = z / (1.0 + z)
            else:
                sig = 1.0 / (1.0 + exp(m))
            c = -y[i] * sig * sample_weight[i] / total
            gb += c
            for k in range(indptr[i], indptr[i + 1]):
                g[indices[k]] += c * data[k]
        for j in range(n_features):
            w[j] -= lr * (g[j] + l2 * w[j])
        b -= lr * gb
    return w_arr, b
