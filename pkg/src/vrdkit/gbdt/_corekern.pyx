# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: histogram accumulation and tree application.

Semantics must match vrdkit.gbdt._kernels_py exactly, including float
accumulation order, so the two backends stay bit-identical.
"""

import numpy as np


def build_histograms(
    const unsigned char[:, ::1] codes,
    const long long[::1] idx,
    const double[::1] grad,
    const double[::1] hess,
    int n_bins,
):
    cdef Py_ssize_t m = idx.shape[0]
    cdef Py_ssize_t n_features = codes.shape[1]
    hist_g_arr = np.zeros((n_features, n_bins), dtype=np.float64)
    hist_h_arr = np.zeros((n_features, n_bins), dtype=np.float64)
    hist_c_arr = np.zeros((n_features, n_bins), dtype=np.int64)
    cdef double[:, ::1] hist_g = hist_g_arr
    cdef double[:, ::1] hist_h = hist_h_arr
    cdef long long[:, ::1] hist_c = hist_c_arr

    cdef Py_ssize_t k, f
    cdef long long i
    cdef int b
    cdef double gi, hi
    with nogil:
        for k in range(m):
            i = idx[k]
            gi = grad[i]
            hi = hess[i]
            for f in range(n_features):
                b = codes[i, f]
                hist_g[f, b] += gi
                hist_h[f, b] += hi
                hist_c[f, b] += 1
    return hist_g_arr, hist_h_arr, hist_c_arr


def apply_tree(
    const double[:, ::1] X,
    const int[::1] feature,
    const double[::1] threshold,
    const unsigned char[::1] is_cat,
    const unsigned long long[:, ::1] cat_bitset,
    const int[::1] left,
    const int[::1] right,
    const unsigned char[::1] is_leaf,
    const double[::1] value,
    double scale,
    double[::1] out,
):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t i
    cdef int node, f
    cdef long long c
    with nogil:
        for i in range(n):
            node = 0
            while not is_leaf[node]:
                f = feature[node]
                if is_cat[node]:
                    c = <long long> X[i, f]
                    if (cat_bitset[node, c >> 6] >> (c & 63)) & 1ULL:
                        node = left[node]
                    else:
                        node = right[node]
                else:
                    if X[i, f] < threshold[node]:
                        node = left[node]
                    else:
                        node = right[node]
            out[i] += scale * value[node]
