# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the lambda-grid loss sweep.

Mirrors ``_kernels_py`` operation for operation; see that module for the
layout of the prepared arrays.
"""

import numpy as np

from cython.parallel cimport parallel, prange, threadid

NAME = "cython"


def weighted_sum(const double[:, ::1] cross, Py_ssize_t origin, const double[::1] weights):
    cdef Py_ssize_t n = weights.shape[0]
    cdef Py_ssize_t n_pairs = cross.shape[1]
    cdef Py_ssize_t k, p, row
    cdef double wk
    out = np.zeros(n_pairs)
    cdef double[::1] acc = out
    with nogil:
        for k in range(n - 1, -1, -1):
            row = origin - k
            wk = weights[k]
            for p in range(n_pairs):
                acc[p] += wk * cross[row, p]
    return out


cdef void _anchor_losses(
    const double[:, ::1] cross,
    Py_ssize_t anchor,
    Py_ssize_t horizon,
    const double[:, ::1] weights,
    const Py_ssize_t[::1] nlags,
    const double[:, ::1] norms,
    double[::1] acc,
    double[::1] realized,
    double[:, ::1] losses,
    Py_ssize_t out_row,
) noexcept nogil:
    cdef Py_ssize_t n_pairs = cross.shape[1]
    cdef Py_ssize_t n_lambdas = nlags.shape[0]
    cdef Py_ssize_t k, p, l, n_eff, row
    cdef double wk, c, scale, diff, se

    for p in range(n_pairs):
        realized[p] = 0.0
    for k in range(1, horizon + 1):
        row = anchor + k
        for p in range(n_pairs):
            realized[p] += cross[row, p]

    scale = <double>horizon
    for l in range(n_lambdas):
        n_eff = nlags[l]
        if n_eff > anchor + 1:
            n_eff = anchor + 1
        for p in range(n_pairs):
            acc[p] = 0.0
        for k in range(n_eff - 1, -1, -1):
            row = anchor - k
            wk = weights[l, k]
            for p in range(n_pairs):
                acc[p] += wk * cross[row, p]
        c = norms[l, n_eff]
        se = 0.0
        for p in range(n_pairs):
            diff = scale * (c * acc[p]) - realized[p]
            se = se + diff * diff
        losses[out_row, l] = se


def loss_surface(
    const double[:, ::1] cross,
    const Py_ssize_t[::1] anchors,
    Py_ssize_t horizon,
    const double[:, ::1] weights,
    const Py_ssize_t[::1] nlags,
    const double[:, ::1] norms,
    int nthreads=1,
):
    """Squared-error surface, shape (len(anchors), len(nlags))."""
    cdef Py_ssize_t n_anchors = anchors.shape[0]
    cdef Py_ssize_t n_pairs = cross.shape[1]
    cdef Py_ssize_t w
    cdef int tid
    if nthreads < 1:
        nthreads = 1
    out = np.empty((n_anchors, nlags.shape[0]))
    cdef double[:, ::1] losses = out
    scratch_acc = np.zeros((nthreads, n_pairs))
    scratch_real = np.zeros((nthreads, n_pairs))
    cdef double[:, ::1] acc = scratch_acc
    cdef double[:, ::1] real = scratch_real
    with nogil, parallel(num_threads=nthreads):
        for w in prange(n_anchors, schedule="static"):
            tid = threadid()
            _anchor_losses(cross, anchors[w], horizon, weights, nlags, norms,
                           acc[tid], real[tid], losses, w)
    return out
