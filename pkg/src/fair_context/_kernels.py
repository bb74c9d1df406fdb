"""Hot numeric kernels: neighbor voting and logistic-regression descent.

Each kernel has two interchangeable implementations: a numba ``@njit``
version used by default, and a pure-numpy fallback. Set the environment
variable ``FAIR_CONTEXT_NUMBA=0`` before import to force the numpy path
(or when numba is not importable, the fallback is used automatically).
``benchmarks/bench_kernels.py`` compares the two.

Contracts shared by both paths:
  - neighbor ranking orders by (squared distance, context index) ascending,
    so exact distance ties always resolve to the lower index;
  - the gradient loop runs full-batch with the L2 term excluded from the
    intercept.
"""

from __future__ import annotations

import os

import numpy as np


def numba_requested() -> bool:
    return os.environ.get("FAIR_CONTEXT_NUMBA", "1").lower() not in ("0", "false", "no")


NUMBA_ACTIVE = False
if numba_requested():
    try:
        from numba import njit, prange

        NUMBA_ACTIVE = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        pass


# --- k-nearest-neighbor vote -------------------------------------------------

def _knn_vote_numpy(context: np.ndarray, labels: np.ndarray, query: np.ndarray,
                    k: int) -> np.ndarray:
    n = context.shape[0]
    k = min(k, n)
    ctx_sq = np.einsum("ij,ij->i", context, context)
    out = np.empty(query.shape[0], dtype=np.float64)
    # chunked to bound the n_query x n_context distance matrix
    chunk = max(1, int(2**22 // max(n, 1)))
    for start in range(0, query.shape[0], chunk):
        q = query[start:start + chunk]
        d = ctx_sq[None, :] - 2.0 * (q @ context.T)
        d += np.einsum("ij,ij->i", q, q)[:, None]
        order = np.argsort(d, axis=1, kind="stable")[:, :k]
        out[start:start + chunk] = labels[order].mean(axis=1)
    return out


if NUMBA_ACTIVE:

    @njit(cache=True, parallel=True, nogil=True)
    def _knn_vote_numba(context, labels, query, k):  # pragma: no cover - jitted
        n, m = context.shape
        nq = query.shape[0]
        kk = min(k, n)
        out = np.empty(nq, dtype=np.float64)
        for qi in prange(nq):
            best_d = np.full(kk, np.inf)
            best_i = np.full(kk, n, dtype=np.int64)
            for ci in range(n):
                d = 0.0
                for j in range(m):
                    diff = query[qi, j] - context[ci, j]
                    d += diff * diff
                # insertion into the sorted (distance, index) buffer
                if d < best_d[kk - 1] or (d == best_d[kk - 1] and ci < best_i[kk - 1]):
                    pos = kk - 1
                    while pos > 0 and (d < best_d[pos - 1]
                                       or (d == best_d[pos - 1] and ci < best_i[pos - 1])):
                        best_d[pos] = best_d[pos - 1]
                        best_i[pos] = best_i[pos - 1]
                        pos -= 1
                    best_d[pos] = d
                    best_i[pos] = ci
            votes = 0.0
            for j in range(kk):
                votes += labels[best_i[j]]
            out[qi] = votes / kk
        return out


def knn_vote(context: np.ndarray, labels: np.ndarray, query: np.ndarray, k: int) -> np.ndarray:
    """Fraction of positive labels among the k nearest context rows, per query row."""
    context = np.ascontiguousarray(context, dtype=np.float64)
    query = np.ascontiguousarray(query, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.float64)
    if NUMBA_ACTIVE:
        return _knn_vote_numba(context, labels, query, k)
    return _knn_vote_numpy(context, labels, query, k)


# --- logistic regression, full-batch gradient descent ------------------------

def _logreg_gd_numpy(X: np.ndarray, y: np.ndarray, l2: float, lr: float,
                     max_iters: int, tol: float):
    n, m = X.shape
    w = np.zeros(m)
    b = 0.0
    iters = 0
    for iters in range(1, max_iters + 1):
        z = X @ w + b
        p = 1.0 / (1.0 + np.exp(-z))
        err = p - y
        gw = X.T @ err / n + l2 * w
        gb = err.mean()
        if not (np.all(np.isfinite(gw)) and np.isfinite(gb)):
            return w, b, -iters
        w -= lr * gw
        b -= lr * gb
        if max(np.abs(gw).max(initial=0.0), abs(gb)) < tol:
            break
    return w, b, iters


if NUMBA_ACTIVE:

    @njit(cache=True, nogil=True)
    def _logreg_gd_numba(X, y, l2, lr, max_iters, tol):  # pragma: no cover - jitted
        n, m = X.shape
        w = np.zeros(m)
        b = 0.0
        gw = np.zeros(m)
        iters = 0
        for it in range(1, max_iters + 1):
            iters = it
            for j in range(m):
                gw[j] = 0.0
            gb = 0.0
            for i in range(n):
                z = b
                for j in range(m):
                    z += X[i, j] * w[j]
                p = 1.0 / (1.0 + np.exp(-z))
                err = p - y[i]
                for j in range(m):
                    gw[j] += err * X[i, j]
                gb += err
            gmax = 0.0
            ok = True
            for j in range(m):
                gw[j] = gw[j] / n + l2 * w[j]
                if not np.isfinite(gw[j]):
                    ok = False
                if abs(gw[j]) > gmax:
                    gmax = abs(gw[j])
            gb /= n
            if not (ok and np.isfinite(gb)):
                return w, b, -it
            w -= lr * gw
            b -= lr * gb
            if max(gmax, abs(gb)) < tol:
                break
        return w, b, iters


def logreg_gd(X: np.ndarray, y: np.ndarray, l2: float, lr: float,
              max_iters: int, tol: float):
    """Run gradient descent on L2-regularized log-loss from zero weights.

    Returns (weights, intercept, iterations); a negative iteration count
    signals a non-finite gradient (caller raises).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if NUMBA_ACTIVE:
        return _logreg_gd_numba(X, y, l2, lr, max_iters, tol)
    return _logreg_gd_numpy(X, y, l2, lr, max_iters, tol)
