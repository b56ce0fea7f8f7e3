"""Order-preserving neighborhood refinement kernels.

Both canonical atom ranks and the per-graph WL labels run the same loop:
every round a node's key becomes ``(own rank, sorted (edge label, neighbor
rank) codes)`` and nodes are re-ranked by lexicographic key order. Because
the old rank is the leading key component, classes only ever split and the
relative order of already-separated classes never changes, so the final
order is decided by the most local difference between two nodes.

Two implementations produce identical output:

* ``refine_numba`` -- ``@njit`` compiled loop, used by default when numba
  imports cleanly.
* ``refine_numpy`` -- vectorized fallback (``np.lexsort`` per round).

Set ``MOLEDIT_DISABLE_NUMBA=1`` to force the numpy path.
"""

from __future__ import annotations

import os

import numpy as np

PAD = -1


def _dense_ranks(values: np.ndarray) -> np.ndarray:
    """1-based dense ranks of a 1-D int array."""
    uniq, inv = np.unique(values, return_inverse=True)
    return inv.astype(np.int64) + 1


def _neighbor_matrix_numpy(ranks, indptr, indices, edge_labels):
    n = ranks.shape[0]
    degree = np.diff(indptr)
    maxdeg = int(degree.max()) if n else 0
    mat = np.full((n, 1 + maxdeg), PAD, dtype=np.int64)
    mat[:, 0] = ranks
    if indices.shape[0]:
        owner = np.repeat(np.arange(n), degree)
        codes = edge_labels * (n + 1) + ranks[indices]
        order = np.lexsort((codes, owner))
        pos = np.arange(order.shape[0]) - indptr[owner[order]]
        mat[owner[order], 1 + pos] = codes[order]
    return mat


def refine_numpy(labels, indptr, indices, edge_labels, max_rounds: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    indptr = np.asarray(indptr, dtype=np.int64)
    indices = np.asarray(indices, dtype=np.int64)
    edge_labels = np.asarray(edge_labels, dtype=np.int64)
    n = labels.shape[0]
    if n == 0:
        return labels.copy()
    ranks = _dense_ranks(labels)
    n_classes = int(ranks.max())
    for _ in range(max_rounds):
        if n_classes == n:
            break
        mat = _neighbor_matrix_numpy(ranks, indptr, indices, edge_labels)
        order = np.lexsort(mat.T[::-1])
        srt = mat[order]
        changed = np.any(srt[1:] != srt[:-1], axis=1)
        new = np.empty(n, dtype=np.int64)
        new[order] = np.concatenate(([1], 1 + np.cumsum(changed)))
        new_classes = int(new.max())
        ranks = new
        if new_classes == n_classes:
            break
        n_classes = new_classes
    return ranks


try:
    if os.environ.get("MOLEDIT_DISABLE_NUMBA", "") not in ("", "0"):
        raise ImportError("numba disabled by MOLEDIT_DISABLE_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False


if HAS_NUMBA:

    @njit(cache=True)
    def _row_less(mat, a, b):
        for k in range(mat.shape[1]):
            if mat[a, k] != mat[b, k]:
                return mat[a, k] < mat[b, k]
        return False

    @njit(cache=True)
    def _row_equal(mat, a, b):
        for k in range(mat.shape[1]):
            if mat[a, k] != mat[b, k]:
                return False
        return True

    @njit(cache=True)
    def _sort_segment(mat, idx, lo, hi, buf):
        # stable sort of idx[lo:hi] by row; rows in a segment share column 0
        n = hi - lo
        if n < 16:
            for i in range(lo + 1, hi):
                v = idx[i]
                j = i - 1
                while j >= lo and _row_less(mat, v, idx[j]):
                    idx[j + 1] = idx[j]
                    j -= 1
                idx[j + 1] = v
            return
        width = 1
        src = idx[lo:hi].copy()
        dst = buf[:n]
        while width < n:
            i = 0
            while i < n:
                mid = min(i + width, n)
                end = min(i + 2 * width, n)
                p, q, o = i, mid, i
                while p < mid and q < end:
                    if _row_less(mat, src[q], src[p]):
                        dst[o] = src[q]
                        q += 1
                    else:
                        dst[o] = src[p]
                        p += 1
                    o += 1
                while p < mid:
                    dst[o] = src[p]
                    p += 1
                    o += 1
                while q < end:
                    dst[o] = src[q]
                    q += 1
                    o += 1
                i += 2 * width
            src, dst = dst, src
            width *= 2
        idx[lo:hi] = src

    @njit(cache=True)
    def _sort_rows(mat, n_classes):
        # rows are keyed by (old rank, ...) and old ranks are dense, so bucket
        # by rank first and only sort inside classes with more than one row
        n = mat.shape[0]
        start = np.zeros(n_classes + 2, dtype=np.int64)
        for v in range(n):
            start[mat[v, 0] + 1] += 1
        for c in range(1, n_classes + 2):
            start[c] += start[c - 1]
        fill = start.copy()
        idx = np.empty(n, dtype=np.int64)
        for v in range(n):
            r = mat[v, 0]
            idx[fill[r]] = v
            fill[r] += 1
        buf = np.empty(n, dtype=np.int64)
        for c in range(1, n_classes + 1):
            if start[c + 1] - start[c] > 1:
                _sort_segment(mat, idx, start[c], start[c + 1], buf)
        return idx

    @njit(cache=True)
    def _refine_kernel(ranks, indptr, indices, edge_labels, max_rounds):
        n = ranks.shape[0]
        maxdeg = 0
        for v in range(n):
            d = indptr[v + 1] - indptr[v]
            if d > maxdeg:
                maxdeg = d
        n_classes = 0
        for v in range(n):
            if ranks[v] > n_classes:
                n_classes = ranks[v]
        mat = np.empty((n, 1 + maxdeg), dtype=np.int64)
        for _ in range(max_rounds):
            if n_classes == n:
                break
            mat[:, :] = PAD
            for v in range(n):
                mat[v, 0] = ranks[v]
                lo = indptr[v]
                hi = indptr[v + 1]
                for e in range(lo, hi):
                    code = edge_labels[e] * (n + 1) + ranks[indices[e]]
                    # insertion sort in place; degrees are small
                    k = 1 + e - lo
                    while k > 1 and mat[v, k - 1] > code:
                        mat[v, k] = mat[v, k - 1]
                        k -= 1
                    mat[v, k] = code
            order = _sort_rows(mat, n_classes)
            new = np.empty(n, dtype=np.int64)
            cls = 1
            new[order[0]] = 1
            for i in range(1, n):
                if not _row_equal(mat, order[i], order[i - 1]):
                    cls += 1
                new[order[i]] = cls
            ranks = new
            if cls == n_classes:
                break
            n_classes = cls
        return ranks

    def refine_numba(labels, indptr, indices, edge_labels, max_rounds: int) -> np.ndarray:
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape[0] == 0:
            return labels.copy()
        return _refine_kernel(
            _dense_ranks(labels),
            np.asarray(indptr, dtype=np.int64),
            np.asarray(indices, dtype=np.int64),
            np.asarray(edge_labels, dtype=np.int64),
            int(max_rounds),
        )

    refine = refine_numba
    BACKEND = "numba"
else:
    refine_numba = None
    refine = refine_numpy
    BACKEND = "numpy"
