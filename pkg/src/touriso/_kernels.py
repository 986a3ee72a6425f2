"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

The backend is chosen once at import time. Set ``TOURISO_DISABLE_NUMBA=1``
to force the numpy path (or when numba is not importable). Both backends
return bit-identical results; ``tests/test_kernels.py`` cross-checks them.
"""

from __future__ import annotations

import os

import numpy as np

try:  # pragma: no cover - exercised implicitly
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

_DISABLED = os.environ.get("TOURISO_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

BACKEND = "numba" if (_HAVE_NUMBA and not _DISABLED) else "numpy"


# --------------------------------------------------------------------------
# numpy implementations
# --------------------------------------------------------------------------


def _dense_ranks(colors: np.ndarray) -> np.ndarray:
    _, inv = np.unique(colors, return_inverse=True)
    return inv.reshape(-1).astype(np.int64)


def refine_numpy(adj: np.ndarray, colors: np.ndarray) -> np.ndarray:
    """Equitable refinement of ``colors`` on the digraph ``adj``.

    New colors are ranks of the rows ``(old color, out-counts per class)`` in
    lexicographic order, so the result is equivariant under isomorphism.
    """
    n = colors.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    cur = _dense_ranks(colors)
    k = int(cur.max()) + 1
    a = adj.astype(np.int64)
    rows = np.arange(n)
    while True:
        onehot = np.zeros((n, k), dtype=np.int64)
        onehot[rows, cur] = 1
        key = np.empty((n, k + 1), dtype=np.int64)
        key[:, 0] = cur
        key[:, 1:] = a @ onehot
        _, new = np.unique(key, axis=0, return_inverse=True)
        new = new.reshape(-1).astype(np.int64)
        k_new = int(new.max()) + 1
        if k_new == k:
            return new
        cur, k = new, k_new


def is_automorphism_numpy(adj: np.ndarray, colors: np.ndarray, perm: np.ndarray) -> bool:
    if not np.array_equal(colors[perm], colors):
        return False
    return bool(np.array_equal(adj[np.ix_(perm, perm)], adj))


def block_counts_numpy(adj: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    """``out[a, b]`` = number of edges from part ``a`` to part ``b``."""
    n = labels.shape[0]
    onehot = np.zeros((n, k), dtype=np.int64)
    onehot[np.arange(n), labels] = 1
    return onehot.T @ adj.astype(np.int64) @ onehot


# --------------------------------------------------------------------------
# numba implementations
# --------------------------------------------------------------------------

if _HAVE_NUMBA:

    @njit(cache=True)
    def _rank_numba(colors):
        n = colors.shape[0]
        order = np.argsort(colors, kind="mergesort")
        out = np.empty(n, dtype=np.int64)
        r = 0
        out[order[0]] = 0
        for t in range(1, n):
            if colors[order[t]] != colors[order[t - 1]]:
                r += 1
            out[order[t]] = r
        return out

    @njit(cache=True)
    def refine_numba(adj, colors):
        n = colors.shape[0]
        if n == 0:
            return np.zeros(0, dtype=np.int64)
        cur = _rank_numba(colors)
        k = cur.max() + 1
        while True:
            key = np.zeros((n, k + 1), dtype=np.int64)
            for u in range(n):
                key[u, 0] = cur[u]
                for v in range(n):
                    if adj[u, v]:
                        key[u, 1 + cur[v]] += 1
            order = np.arange(n)
            for col in range(k, -1, -1):
                vals = np.empty(n, dtype=np.int64)
                for t in range(n):
                    vals[t] = key[order[t], col]
                idx = np.argsort(vals, kind="mergesort")
                order = order[idx]
            new = np.empty(n, dtype=np.int64)
            r = 0
            new[order[0]] = 0
            for t in range(1, n):
                a = order[t]
                b = order[t - 1]
                for col in range(k + 1):
                    if key[a, col] != key[b, col]:
                        r += 1
                        break
                new[a] = r
            if r + 1 == k:
                return new
            cur = new
            k = r + 1

    @njit(cache=True)
    def is_automorphism_numba(adj, colors, perm):
        n = perm.shape[0]
        for u in range(n):
            if colors[perm[u]] != colors[u]:
                return False
        for u in range(n):
            pu = perm[u]
            for v in range(n):
                if adj[pu, perm[v]] != adj[u, v]:
                    return False
        return True

    @njit(cache=True)
    def block_counts_numba(adj, labels, k):
        n = labels.shape[0]
        out = np.zeros((k, k), dtype=np.int64)
        for u in range(n):
            for v in range(n):
                if adj[u, v]:
                    out[labels[u], labels[v]] += 1
        return out


def get_backend(name: str | None = None):
    """Return ``(refine, is_automorphism, block_counts)`` for a backend."""
    name = name or BACKEND
    if name == "numba":
        if not _HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is not importable")
        return refine_numba, is_automorphism_numba, block_counts_numba
    if name == "numpy":
        return refine_numpy, is_automorphism_numpy, block_counts_numpy
    raise ValueError(f"unknown backend {name!r}")


refine, is_automorphism, block_counts = get_backend()
