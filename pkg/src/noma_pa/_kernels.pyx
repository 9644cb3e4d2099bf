# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Monte Carlo inner loops. Mirrors ``_kernels_py`` operation for operation."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def model2_gains(const double[:, :, :, ::1] hr, const double[:, :, :, ::1] hi,
                 const double[::1] pr, const double[::1] pi):
    """||H p||^2 for a batch of channel matrices split into real/imag parts.

    ``hr``/``hi`` have shape (trials, users, rx, tx); ``pr``/``pi`` are the
    precoder parts. Returns a (trials, users) array.
    """
    cdef Py_ssize_t c = hr.shape[0], k = hr.shape[1], nrx = hr.shape[2], ntx = hr.shape[3]
    cdef Py_ssize_t t, u, j, m
    cdef double re, im, g, term
    out_arr = np.empty((c, k), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for t in range(c):
            for u in range(k):
                g = 0.0
                for j in range(nrx):
                    re = 0.0
                    im = 0.0
                    for m in range(ntx):
                        term = hr[t, u, j, m] * pr[m] - hi[t, u, j, m] * pi[m]
                        re = re + term
                        term = hr[t, u, j, m] * pi[m] + hi[t, u, j, m] * pr[m]
                        im = im + term
                    term = re * re + im * im
                    g = g + term
                out[t, u] = g
    return out_arr


def count_below(const double[:, ::1] gains, const double[:, :, ::1] thresholds):
    """counts[x, u, s] = #{t : gains[t, u] < thresholds[x, u, s]}."""
    cdef Py_ssize_t c = gains.shape[0], k = gains.shape[1]
    cdef Py_ssize_t nx = thresholds.shape[0], ns = thresholds.shape[2]
    cdef Py_ssize_t t, x, u, s
    cdef double g
    if thresholds.shape[1] != k:
        raise ValueError("thresholds and gains disagree on the number of users")
    counts_arr = np.zeros((nx, k, ns), dtype=np.int64)
    cdef cnp.int64_t[:, :, ::1] counts = counts_arr
    with nogil:
        for t in range(c):
            for u in range(k):
                g = gains[t, u]
                for x in range(nx):
                    for s in range(ns):
                        counts[x, u, s] += g < thresholds[x, u, s]
    return counts_arr
