# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled greedy selection loops.

Must stay behaviorally identical to fallback.py: scans cover pairs
(i, j) with i < j, strict comparisons keep the lexicographically
smallest pair on ties, excluded LFs and used edges never re-enter.

Each row caches its best remaining entry; a step recomputes only the
rows whose cached pick was just invalidated, so a step costs O(m) plus
the recomputed rows instead of a full O(m^2) rescan. Row caches use the
same strict comparisons as a rescan, so selections are bit-identical.
"""

from libc.math cimport INFINITY

import numpy as np


cdef inline void _refresh_removal_row(
    const double[:, :] matrix,
    const unsigned char[::1] active,
    double[::1] row_best,
    Py_ssize_t[::1] row_arg,
    Py_ssize_t i,
    Py_ssize_t m,
) noexcept:
    cdef Py_ssize_t j
    cdef double best = -INFINITY
    cdef Py_ssize_t arg = -1
    cdef double v
    for j in range(i + 1, m):
        if not active[j]:
            continue
        v = matrix[i, j]
        if v > best:
            best = v
            arg = j
    row_best[i] = best
    row_arg[i] = arg


def greedy_removal(const double[:, :] matrix, Py_ssize_t m_r):
    cdef Py_ssize_t m = matrix.shape[0]
    removed_arr = np.empty(m_r, dtype=np.intp)
    active_arr = np.ones(m, dtype=np.uint8)
    row_best_arr = np.empty(m, dtype=np.float64)
    row_arg_arr = np.empty(m, dtype=np.intp)
    cdef Py_ssize_t[::1] removed = removed_arr
    cdef unsigned char[::1] active = active_arr
    cdef double[::1] row_best = row_best_arr
    cdef Py_ssize_t[::1] row_arg = row_arg_arr
    cdef Py_ssize_t t, i, best_i, gone
    cdef double best
    for i in range(m):
        _refresh_removal_row(matrix, active, row_best, row_arg, i, m)
    for t in range(m_r):
        best = -INFINITY
        best_i = -1
        for i in range(m):
            if active[i] and row_arg[i] >= 0 and row_best[i] > best:
                best = row_best[i]
                best_i = i
        gone = row_arg[best_i]
        removed[t] = gone
        active[gone] = 0
        for i in range(gone):
            if active[i] and row_arg[i] == gone:
                _refresh_removal_row(matrix, active, row_best, row_arg, i, m)
    return removed_arr


cdef inline void _refresh_edge_row(
    const double[:, :] matrix,
    const unsigned char[:, ::1] used,
    double[::1] row_best,
    Py_ssize_t[::1] row_arg,
    Py_ssize_t i,
    Py_ssize_t m,
    Py_ssize_t a0,
    Py_ssize_t a1,
) noexcept:
    cdef Py_ssize_t j
    cdef double best = -INFINITY
    cdef Py_ssize_t arg = -1
    cdef double v
    for j in range(i + 1, m):
        if j == a0 or j == a1 or used[i, j]:
            continue
        v = matrix[i, j]
        if v > best:
            best = v
            arg = j
    row_best[i] = best
    row_arg[i] = arg


def greedy_edges(const double[:, :] matrix, Py_ssize_t m_e):
    cdef Py_ssize_t m = matrix.shape[0]
    cdef Py_ssize_t i, j, t, best_i, a0, a1
    cdef double best, v

    # anchor pair: least similar off-diagonal entry
    best = INFINITY
    a0 = -1
    a1 = -1
    for i in range(m):
        for j in range(i + 1, m):
            v = matrix[i, j]
            if v < best:
                best = v
                a0 = i
                a1 = j

    used_arr = np.zeros((m, m), dtype=np.uint8)
    edges_arr = np.empty((m_e, 2), dtype=np.intp)
    row_best_arr = np.empty(m, dtype=np.float64)
    row_arg_arr = np.empty(m, dtype=np.intp)
    cdef unsigned char[:, ::1] used = used_arr
    cdef Py_ssize_t[:, ::1] edges = edges_arr
    cdef double[::1] row_best = row_best_arr
    cdef Py_ssize_t[::1] row_arg = row_arg_arr
    for i in range(m):
        if i == a0 or i == a1:
            row_best[i] = -INFINITY
            row_arg[i] = -1
        else:
            _refresh_edge_row(matrix, used, row_best, row_arg, i, m, a0, a1)
    for t in range(m_e):
        best = -INFINITY
        best_i = -1
        for i in range(m):
            if row_arg[i] >= 0 and row_best[i] > best:
                best = row_best[i]
                best_i = i
        edges[t, 0] = best_i
        edges[t, 1] = row_arg[best_i]
        used[best_i, row_arg[best_i]] = 1
        _refresh_edge_row(matrix, used, row_best, row_arg, best_i, m, a0, a1)
    return (a0, a1), edges_arr
