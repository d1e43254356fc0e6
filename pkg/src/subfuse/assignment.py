"""Exact minimum-cost bipartite assignment.

The Hungarian solver gives one optimal matching plus dual potentials. Every
optimal matching uses only edges whose reduced cost is zero under those
potentials, so the lexicographically smallest optimal matching is found by a
greedy row-by-row pass over that tight subgraph with augmenting-path checks.
"""
from __future__ import annotations

from collections import deque

import numpy as np

from . import kernels


class AssignmentInputError(ValueError):
    pass


def _as_matrix(cost) -> np.ndarray:
    try:
        arr = np.asarray(cost, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise AssignmentInputError(f"cost matrix is not a rectangular numeric array: {e}") from e
    if arr.size == 0:
        rows = len(cost) if not isinstance(cost, np.ndarray) else cost.shape[0]
        return np.zeros((rows, 0))
    if arr.ndim != 2:
        raise AssignmentInputError("cost matrix must be rectangular")
    if not np.all(np.isfinite(arr)):
        raise AssignmentInputError("cost matrix has non-finite entries")
    return arr


def _pad_square(arr: np.ndarray) -> np.ndarray:
    n, m = arr.shape
    if n == m:
        return np.ascontiguousarray(arr)
    size = max(n, m)
    fill = float(np.abs(arr).sum()) + 1.0
    sq = np.full((size, size), fill)
    sq[:n, :m] = arr
    return sq


def _lex_smallest(tight: list[list[int]], match: list[int]) -> list[int]:
    """Lexicographically smallest perfect matching in the tight graph.

    ``tight[i]`` lists the columns adjacent to row ``i`` in increasing order
    and ``match`` is any perfect matching (row -> col) in that graph.
    """
    n = len(match)
    row_of = [0] * n
    for i, j in enumerate(match):
        row_of[j] = i
    fixed = [False] * n

    for i in range(n):
        for j in tight[i]:
            if j >= match[i]:
                break
            if fixed[j]:
                continue
            if _reassign(i, j, tight, match, row_of, fixed):
                break
        fixed[match[i]] = True
    return match


def _reassign(i, j, tight, match, row_of, fixed) -> bool:
    """Give column ``j`` to row ``i``; its displaced owner walks to ``i``'s old column."""
    r, free_col = row_of[j], match[i]
    prev: dict[int, int] = {}
    queue = deque([r])
    while queue:
        x = queue.popleft()
        for col in tight[x]:
            if fixed[col] or col == j or col in prev:
                continue
            prev[col] = x
            if col == free_col:
                match[i], row_of[j] = j, i
                while True:
                    rr = prev[col]
                    nxt = match[rr]
                    match[rr], row_of[col] = col, rr
                    if rr == r:
                        return True
                    col = nxt
            queue.append(row_of[col])
    return False


def solve_assignment(cost) -> list[tuple[int, int]]:
    """Minimum-cost matching of size ``min(n, m)`` as sorted ``(row, col)`` pairs.

    Among all optimal matchings the lexicographically smallest sorted pair
    sequence is returned, so results do not depend on solver internals.
    """
    arr = _as_matrix(cost)
    n, m = arr.shape
    if n == 0 or m == 0:
        return []
    sq = _pad_square(arr)
    size = sq.shape[0]
    col_of_row, u, v = kernels.hungarian(sq)
    base = float(sum(sq[i, col_of_row[i]] for i in range(size)))
    scale = max(1.0, float(np.abs(sq).max()))
    tol = 1e-9 * scale * size
    reduced = sq - np.asarray(u)[:, None] - np.asarray(v)[None, :]
    tight = [np.flatnonzero(reduced[i] <= tol).tolist() for i in range(size)]
    for i, j in enumerate(col_of_row):
        if j not in tight[i]:
            tight[i].append(j)
            tight[i].sort()
    match = _lex_smallest(tight, list(col_of_row))
    if float(sum(sq[i, match[i]] for i in range(size))) > base + tol:
        match = list(col_of_row)
    return [(i, j) for i, j in enumerate(match) if i < n and j < m]


def assignment_cost(cost, pairs) -> float:
    arr = np.asarray(cost, dtype=np.float64)
    return float(sum(arr[i, j] for i, j in pairs)) if pairs else 0.0


__all__ = ["AssignmentInputError", "solve_assignment", "assignment_cost"]
