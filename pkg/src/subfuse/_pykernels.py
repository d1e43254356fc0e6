"""Pure-Python kernels. Same signatures as the compiled ``_ckernels`` module.

Sequence arguments are integer buffers (``array('q')``) or any indexable
sequence of ints; the cost matrix is a C-contiguous float64 ndarray.
"""
from __future__ import annotations

import math


def edit_distance(a, b) -> int:
    n, m = len(a), len(b)
    if n < m:
        a, b, n, m = b, a, m, n
    if m == 0:
        return n
    prev = list(range(m + 1))
    for i in range(1, n + 1):
        ai = a[i - 1]
        cur = [i] + [0] * m
        for j in range(1, m + 1):
            sub = prev[j - 1] + (ai != b[j - 1])
            ins = cur[j - 1] + 1
            dele = prev[j] + 1
            cur[j] = min(sub, ins, dele)
        prev = cur
    return prev[m]


def lcs_length(a, b) -> int:
    n, m = len(a), len(b)
    if n < m:
        a, b, n, m = b, a, m, n
    if m == 0:
        return 0
    prev = [0] * (m + 1)
    for i in range(n):
        ai = a[i]
        cur = [0] * (m + 1)
        for j in range(m):
            if ai == b[j]:
                cur[j + 1] = prev[j] + 1
            else:
                cur[j + 1] = cur[j] if cur[j] > prev[j + 1] else prev[j + 1]
        prev = cur
    return prev[m]


def best_window(needle, haystack):
    """Return ``(start, lcs, window_len)`` of the best-matching window.

    Windows have the needle's length (a single shorter window when the
    haystack is shorter). Best = max LCS, then min edit distance, then
    smallest start.
    """
    L, H = len(needle), len(haystack)
    if H == 0:
        return 0, 0, 0
    wlen = L if H >= L else H
    best_start, best_lcs, best_ed = 0, -1, 0
    for s in range(H - wlen + 1):
        w = haystack[s:s + wlen]
        k = lcs_length(needle, w)
        if k > best_lcs:
            best_start, best_lcs = s, k
            best_ed = -1
        elif k == best_lcs:
            if best_ed < 0:
                best_ed = edit_distance(needle, haystack[best_start:best_start + wlen])
            ed = edit_distance(needle, w)
            if ed < best_ed:
                best_start, best_ed = s, ed
    return best_start, best_lcs, wlen


def hungarian(cost):
    """Square min-cost assignment with row/column potentials, O(n^3).

    Returns ``(col_of_row, u, v)`` with ``cost[i, j] - u[i] - v[j] >= 0``
    everywhere and zero on the returned pairs.
    """
    n = cost.shape[0]
    c = cost.tolist()
    inf = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    p = [0] * (n + 1)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            row = c[i0 - 1]
            ui0 = u[i0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = row[j - 1] - ui0 - v[j]
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
    return col_of_row, u[1:], v[1:]
