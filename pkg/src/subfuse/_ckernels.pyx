# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_pykernels``."""
from libc.stdlib cimport malloc, free
from libc.math cimport INFINITY

import numpy as np


cdef Py_ssize_t _edit(const long long[::1] a, Py_ssize_t a0, Py_ssize_t n,
                      const long long[::1] b, Py_ssize_t b0, Py_ssize_t m) nogil:
    cdef Py_ssize_t i, j, sub, best
    cdef Py_ssize_t* prev
    cdef Py_ssize_t* cur
    cdef Py_ssize_t* tmp
    if n == 0:
        return m
    if m == 0:
        return n
    prev = <Py_ssize_t*> malloc((m + 1) * sizeof(Py_ssize_t))
    cur = <Py_ssize_t*> malloc((m + 1) * sizeof(Py_ssize_t))
    for j in range(m + 1):
        prev[j] = j
    for i in range(1, n + 1):
        cur[0] = i
        for j in range(1, m + 1):
            sub = prev[j - 1] + (a[a0 + i - 1] != b[b0 + j - 1])
            best = cur[j - 1] + 1
            if prev[j] + 1 < best:
                best = prev[j] + 1
            if sub < best:
                best = sub
            cur[j] = best
        tmp = prev
        prev = cur
        cur = tmp
    best = prev[m]
    free(prev)
    free(cur)
    return best


cdef Py_ssize_t _lcs(const long long[::1] a, Py_ssize_t a0, Py_ssize_t n,
                     const long long[::1] b, Py_ssize_t b0, Py_ssize_t m) nogil:
    cdef Py_ssize_t i, j, res
    cdef Py_ssize_t* prev
    cdef Py_ssize_t* cur
    cdef Py_ssize_t* tmp
    if n == 0 or m == 0:
        return 0
    prev = <Py_ssize_t*> malloc((m + 1) * sizeof(Py_ssize_t))
    cur = <Py_ssize_t*> malloc((m + 1) * sizeof(Py_ssize_t))
    for j in range(m + 1):
        prev[j] = 0
    cur[0] = 0
    for i in range(n):
        for j in range(m):
            if a[a0 + i] == b[b0 + j]:
                cur[j + 1] = prev[j] + 1
            elif cur[j] > prev[j + 1]:
                cur[j + 1] = cur[j]
            else:
                cur[j + 1] = prev[j + 1]
        tmp = prev
        prev = cur
        cur = tmp
    res = prev[m]
    free(prev)
    free(cur)
    return res


def edit_distance(const long long[::1] a, const long long[::1] b):
    return _edit(a, 0, a.shape[0], b, 0, b.shape[0])


def lcs_length(const long long[::1] a, const long long[::1] b):
    return _lcs(a, 0, a.shape[0], b, 0, b.shape[0])


def best_window(const long long[::1] needle, const long long[::1] haystack):
    cdef Py_ssize_t L = needle.shape[0]
    cdef Py_ssize_t H = haystack.shape[0]
    cdef Py_ssize_t wlen, s, k, ed
    cdef Py_ssize_t best_start = 0, best_lcs = -1, best_ed = -1
    if H == 0:
        return 0, 0, 0
    wlen = L if H >= L else H
    with nogil:
        for s in range(H - wlen + 1):
            k = _lcs(needle, 0, L, haystack, s, wlen)
            if k > best_lcs:
                best_start = s
                best_lcs = k
                best_ed = -1
            elif k == best_lcs:
                if best_ed < 0:
                    best_ed = _edit(needle, 0, L, haystack, best_start, wlen)
                ed = _edit(needle, 0, L, haystack, s, wlen)
                if ed < best_ed:
                    best_start = s
                    best_ed = ed
    return best_start, best_lcs, wlen


def hungarian(cost):
    cdef double[:, ::1] c = np.ascontiguousarray(cost, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0]
    cdef double[::1] u = np.zeros(n + 1)
    cdef double[::1] v = np.zeros(n + 1)
    cdef double[::1] minv = np.empty(n + 1)
    cdef Py_ssize_t[::1] p = np.zeros(n + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] way = np.zeros(n + 1, dtype=np.intp)
    cdef unsigned char[::1] used = np.zeros(n + 1, dtype=np.uint8)
    cdef Py_ssize_t i, j, j0, j1, i0
    cdef double delta, cur, ui0
    with nogil:
        for i in range(1, n + 1):
            p[0] = i
            j0 = 0
            for j in range(n + 1):
                minv[j] = INFINITY
                used[j] = 0
            while True:
                used[j0] = 1
                i0 = p[j0]
                ui0 = u[i0]
                delta = INFINITY
                j1 = 0
                for j in range(1, n + 1):
                    if not used[j]:
                        cur = c[i0 - 1, j - 1] - ui0 - v[j]
                        if cur < minv[j]:
                            minv[j] = cur
                            way[j] = j0
                        if minv[j] < delta:
                            delta = minv[j]
                            j1 = j
                for j in range(n + 1):
                    if used[j]:
                        u[p[j]] += delta
                        v[j] -= delta
                    else:
                        minv[j] -= delta
                j0 = j1
                if p[j0] == 0:
                    break
            while j0:
                j1 = way[j0]
                p[j0] = p[j1]
                j0 = j1
    col_of_row = [0] * n
    for j in range(1, n + 1):
        col_of_row[p[j] - 1] = j - 1
    return col_of_row, list(u[1:]), list(v[1:])
