"""Compiled inner loops for Kendall's tau (merge-sort inversion counting)."""

import numba
import numpy as np
from numba import njit, prange

# omp first: thread-safe for concurrent callers and avoids probing an old TBB
numba.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]


RUN = 16


@njit(cache=True, nogil=True)
def count_inversions(a, buf):
    """Number of pairs t < u with a[t] > a[u].

    Insertion-sorts runs of ``RUN`` elements, then merges bottom-up; the
    sorted result ends up in ``a`` or ``buf``.
    """
    n = a.size
    inv = 0
    for lo in range(0, n, RUN):
        hi = min(lo + RUN, n)
        for t in range(lo + 1, hi):
            v = a[t]
            u = t - 1
            while u >= lo and a[u] > v:
                a[u + 1] = a[u]
                u -= 1
            inv += t - 1 - u
            a[u + 1] = v
    src = a
    dst = buf
    width = RUN
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i = lo
            j = mid
            k = lo
            while i < mid and j < hi:
                if src[i] <= src[j]:
                    dst[k] = src[i]
                    i += 1
                else:
                    dst[k] = src[j]
                    j += 1
                    inv += mid - i
                k += 1
            while i < mid:
                dst[k] = src[i]
                i += 1
                k += 1
            while j < hi:
                dst[k] = src[j]
                j += 1
                k += 1
        src, dst = dst, src
        width *= 2
    return inv


@njit(cache=True, nogil=True)
def pair_discordant(order_x, ranks_y):
    """Discordant pairs between x and y given argsort(x) and the ranks of y."""
    n = order_x.size
    y = np.empty(n, np.int32)
    buf = np.empty(n, np.int32)
    for t in range(n):
        y[t] = ranks_y[order_x[t]]
    return count_inversions(y, buf)


@njit(parallel=True, cache=True, nogil=True)
def concordance_numerators(order, ranks, pa, pb):
    """Matrix of (concordant - discordant) counts over all row pairs.

    ``order[a]`` is argsort of row a, ``ranks[b]`` the ranks of row b, and
    (pa[k], pb[k]) enumerates the off-diagonal pairs a < b.
    """
    p, n = ranks.shape
    m = n * (n - 1) // 2
    out = np.empty((p, p), np.int64)
    for k in prange(pa.size):
        a = pa[k]
        b = pb[k]
        num = m - 2 * pair_discordant(order[a], ranks[b])
        out[a, b] = num
        out[b, a] = num
    for a in range(p):
        out[a, a] = m
    return out
