"""Fixpoint and reachability kernels over CSR adjacency arrays.

Two interchangeable backends: numba-compiled worklist loops, and a numpy
fallback that relaxes all edges at once until nothing changes.  Set
``MINI3C_NO_NUMBA=1`` to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

_FORCE_NUMPY = os.environ.get("MINI3C_NO_NUMBA", "") not in ("", "0")

try:
    if _FORCE_NUMPY:
        raise ImportError
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


def to_csr(n: int, src: np.ndarray, dst: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((dst, src))
    s = src[order]
    indices = dst[order].astype(np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, s + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, indices


# --------------------------------------------------------------------------- numpy versions


def _raise_np(val, fixed, src, dst, check):
    """Propagate val[src] upward into val[dst]; fixed nodes never move.

    Returns the first violated edge index, or -1.
    """
    val = val.copy()
    if len(src) == 0:
        return val, -1
    free = ~fixed
    while True:
        new = val.copy()
        np.maximum.at(new, dst, val[src])
        new[fixed] = val[fixed]
        if np.array_equal(new, val):
            break
        val = new
    if check:
        bad = np.nonzero((val[src] > val[dst]) & ~free[dst])[0]
        if len(bad):
            return val, int(bad[0])
    return val, -1


def _reach_np(n, indptr, indices, sources):
    seen = np.zeros(n, dtype=np.bool_)
    frontier = np.unique(np.asarray(sources, dtype=np.int64))
    seen[frontier] = True
    while len(frontier):
        starts = indptr[frontier]
        counts = indptr[frontier + 1] - starts
        total = int(counts.sum())
        if total == 0:
            break
        offs = np.repeat(starts - np.concatenate(([0], np.cumsum(counts)[:-1])), counts) + np.arange(total)
        nxt = np.unique(indices[offs])
        nxt = nxt[~seen[nxt]]
        seen[nxt] = True
        frontier = nxt
    return seen


# --------------------------------------------------------------------------- numba versions

if HAVE_NUMBA:

    @njit(cache=True)
    def _raise_nb(val, fixed, indptr, indices, eidx, check):  # pragma: no cover - compiled
        n = len(val)
        val = val.copy()
        stack = np.empty(n, dtype=np.int64)
        onstack = np.zeros(n, dtype=np.bool_)
        top = 0
        for v in range(n - 1, -1, -1):
            stack[top] = v
            top += 1
            onstack[v] = True
        while top > 0:
            top -= 1
            x = stack[top]
            onstack[x] = False
            for k in range(indptr[x], indptr[x + 1]):
                y = indices[k]
                if val[x] > val[y]:
                    if fixed[y]:
                        continue
                    val[y] = val[x]
                    if not onstack[y]:
                        stack[top] = y
                        top += 1
                        onstack[y] = True
        if check:
            best = -1
            for x in range(n):
                for k in range(indptr[x], indptr[x + 1]):
                    y = indices[k]
                    if fixed[y] and val[x] > val[y]:
                        if best == -1 or eidx[k] < best:
                            best = eidx[k]
            return val, best
        return val, -1

    @njit(cache=True)
    def _reach_nb(n, indptr, indices, sources):  # pragma: no cover - compiled
        seen = np.zeros(n, dtype=np.bool_)
        stack = np.empty(n, dtype=np.int64)
        top = 0
        for s in sources:
            if not seen[s]:
                seen[s] = True
                stack[top] = s
                top += 1
        while top > 0:
            top -= 1
            x = stack[top]
            for k in range(indptr[x], indptr[x + 1]):
                y = indices[k]
                if not seen[y]:
                    seen[y] = True
                    stack[top] = y
                    top += 1
        return seen


# --------------------------------------------------------------------------- dispatch


def raise_to_fixpoint(val, fixed, src, dst, check=True, backend=None):
    """Least fixpoint of ``val[dst] >= val[src]`` over all edges.

    ``fixed`` nodes keep their value.  With ``check`` the index (into
    ``src``/``dst``) of the first edge still violated is returned, else -1.
    """
    backend = backend or BACKEND
    val = np.asarray(val, dtype=np.int64)
    fixed = np.asarray(fixed, dtype=np.bool_)
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    if backend == "numba":
        order = np.lexsort((dst, src))
        indptr, indices = to_csr(len(val), src, dst)
        return _raise_nb(val, fixed, indptr, indices, order.astype(np.int64), check)
    return _raise_np(val, fixed, src, dst, check)


def reachable(n, src, dst, sources, backend=None) -> np.ndarray:
    """Boolean mask of nodes reachable from ``sources`` (inclusive)."""
    backend = backend or BACKEND
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    sources = np.asarray(list(sources), dtype=np.int64)
    indptr, indices = to_csr(n, src, dst)
    if backend == "numba":
        return _reach_nb(n, indptr, indices, sources)
    return _reach_np(n, indptr, indices, sources)


def warmup() -> None:
    """Trigger JIT compilation so later timings exclude it."""
    if HAVE_NUMBA:
        raise_to_fixpoint(np.zeros(2), np.zeros(2, bool), np.array([0]), np.array([1]))
        reachable(2, np.array([0]), np.array([1]), [0])
