"""Compiled kernels for the partition engine.

All arrays are CSR-style int64. ``rows`` always means family row indices
(0..n-1), never vector ids; callers translate.
"""
from __future__ import annotations

import numpy as np
from numba import njit


def incidence_csr(indptr: np.ndarray, positions: np.ndarray):
    """Invert the vector->coordinate CSR into coordinate->rows.

    Returns ``(coords, inc_indptr, inc_rows, entry_coord)``: the distinct
    positions in increasing order, the CSR of rows touching each of them
    (rows ascending, thanks to the stable sort), and for every stored entry
    the index of its coordinate in ``coords``.
    """
    n = len(indptr) - 1
    rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
    order = np.argsort(positions, kind="stable")
    sorted_pos = positions[order]
    if len(sorted_pos):
        starts = np.flatnonzero(np.concatenate(([True], sorted_pos[1:] != sorted_pos[:-1])))
    else:
        starts = np.zeros(0, dtype=np.int64)
    coords = sorted_pos[starts]
    inc_indptr = np.concatenate((starts, [len(sorted_pos)])).astype(np.int64)
    inc_rows = rows[order]
    entry_coord = np.empty(len(positions), dtype=np.int64)
    group = np.cumsum(np.concatenate(([False], sorted_pos[1:] != sorted_pos[:-1]))) if len(sorted_pos) else sorted_pos
    entry_coord[order] = group
    return coords, inc_indptr, inc_rows, entry_coord


@njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    # path compression
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def union_find_components(n, inc_indptr, inc_rows):
    """Canonical component (minimum row) of every row.

    Rows sharing a coordinate are merged through that coordinate's incidence
    list; the intersection graph itself is never built.
    """
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    for c in range(len(inc_indptr) - 1):
        a = inc_indptr[c]
        b = inc_indptr[c + 1]
        if b - a < 2:
            continue
        r0 = _find(parent, inc_rows[a])
        for k in range(a + 1, b):
            r1 = _find(parent, inc_rows[k])
            if r1 == r0:
                continue
            if size[r0] < size[r1]:
                r0, r1 = r1, r0
            parent[r1] = r0
            size[r0] += size[r1]
    least = np.full(n, n, dtype=np.int64)
    root_of = np.empty(n, dtype=np.int64)
    for i in range(n):
        r = _find(parent, i)
        root_of[i] = r
        if i < least[r]:
            least[r] = i
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        out[i] = least[root_of[i]]
    return out


@njit(cache=True)
def bfs_components(n, indptr, entry_coord, n_coords, inc_indptr, inc_rows):
    """Canonical component of every row by breadth-first search.

    Neighbours of a row are found through the coordinates of its support;
    each coordinate's incidence list is scanned once in total.
    """
    comp = np.full(n, -1, dtype=np.int64)
    seen_coord = np.zeros(n_coords, dtype=np.bool_)
    queue = np.empty(n, dtype=np.int64)
    for start in range(n):
        if comp[start] >= 0:
            continue
        # every row below `start` is already placed, so `start` is the minimum
        comp[start] = start
        head = 0
        tail = 1
        queue[0] = start
        while head < tail:
            r = queue[head]
            head += 1
            for e in range(indptr[r], indptr[r + 1]):
                c = entry_coord[e]
                if seen_coord[c]:
                    continue
                seen_coord[c] = True
                for k in range(inc_indptr[c], inc_indptr[c + 1]):
                    s = inc_rows[k]
                    if comp[s] < 0:
                        comp[s] = start
                        queue[tail] = s
                        tail += 1
    return comp


def rank_within_components(comp: np.ndarray) -> np.ndarray:
    """0-based position of each row inside its component, by row order."""
    n = len(comp)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    order = np.argsort(comp, kind="stable")
    sc = comp[order]
    run_start = np.concatenate(([True], sc[1:] != sc[:-1]))
    idx = np.arange(n)
    first = np.maximum.accumulate(np.where(run_start, idx, 0))
    out = np.empty(n, dtype=np.int64)
    out[order] = idx - first
    return out
