"""Hot numeric kernels with optional numba acceleration.

Two inner loops dominate runtime at scale: the cyclic Jacobi symmetric
eigensolver (called once per trial point inside the barrier iterations) and
exhaustive enumeration over sign vectors (the ground-truth arbiter for
sign-integer problems, 2**n evaluations).  Both are written as plain loops
and compiled with ``numba.njit`` when available.

Backend selection:

* default: numba-compiled kernels if numba imports cleanly;
* ``CANON_DUAL_PURE_NUMPY=1`` in the environment (or numba missing): a
  pure-numpy path, LAPACK ``eigh`` plus chunked vectorized enumeration.

``use_backend()`` rebinds the dispatch at runtime for tests and benchmarks.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None
    NUMBA_AVAILABLE = False


def _jacobi_eigh_impl(a):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns eigenvalues ascending and the matching orthonormal eigenvector
    columns.  Rotations follow the Rutishauser update; convergence is
    declared when the off-diagonal Frobenius mass falls below 1e-14 of the
    total Frobenius norm.
    """
    n = a.shape[0]
    A = a.copy()
    V = np.eye(n)
    if n == 1:
        w = np.empty(1)
        w[0] = A[0, 0]
        return w, V
    for sweep in range(60):
        off = 0.0
        total = 0.0
        for i in range(n):
            total += A[i, i] * A[i, i]
            for j in range(i + 1, n):
                off += A[i, j] * A[i, j]
        total += 2.0 * off
        if off <= 1e-28 * total or total == 0.0:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                g = 100.0 * abs(apq)
                if sweep > 3 and abs(A[p, p]) + g == abs(A[p, p]) and abs(A[q, q]) + g == abs(A[q, q]):
                    A[p, q] = 0.0
                    A[q, p] = 0.0
                    continue
                if apq == 0.0:
                    continue
                theta = 0.5 * (A[q, q] - A[p, p]) / apq
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(1.0 + theta * theta))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                tau = s / (1.0 + c)
                h = t * apq
                A[p, p] -= h
                A[q, q] += h
                A[p, q] = 0.0
                A[q, p] = 0.0
                for r in range(n):
                    if r != p and r != q:
                        arp = A[r, p]
                        arq = A[r, q]
                        A[r, p] = arp - s * (arq + tau * arp)
                        A[p, r] = A[r, p]
                        A[r, q] = arq + s * (arp - tau * arq)
                        A[q, r] = A[r, q]
                for r in range(n):
                    vrp = V[r, p]
                    vrq = V[r, q]
                    V[r, p] = vrp - s * (vrq + tau * vrp)
                    V[r, q] = vrq + s * (vrp - tau * vrq)
    w = np.empty(n)
    for i in range(n):
        w[i] = A[i, i]
    order = np.argsort(w)
    w_sorted = np.empty(n)
    V_sorted = np.empty((n, n))
    for k in range(n):
        w_sorted[k] = w[order[k]]
        for r in range(n):
            V_sorted[r, k] = V[r, order[k]]
    return w_sorted, V_sorted


def _enum_signs_impl(Q, f):
    """Exact minimum of 0.5*x'Qx - f'x over sign vectors x in {-1,+1}^n.

    Walks assignments in lexicographic order (coordinate 0 most significant,
    -1 before +1) with incremental objective updates; near-ties trigger an
    exact recomputation so the first, lexicographically smallest argmin wins.
    """
    n = Q.shape[0]
    x = np.full(n, -1.0)
    g = Q @ x
    running = 0.5 * (x @ g) - f @ x
    best_val = running
    best_x = x.copy()
    total = 1 << n
    for k in range(1, total):
        changed = (k - 1) ^ k
        j = 0
        while changed != 0:
            if changed & 1:
                i = n - 1 - j
                delta = -2.0 * x[i]
                running += delta * (g[i] - f[i]) + 2.0 * Q[i, i]
                for r in range(n):
                    g[r] += delta * Q[r, i]
                x[i] = -x[i]
            changed >>= 1
            j += 1
        if running < best_val + 1e-9 * (1.0 + abs(best_val)):
            exact = 0.5 * (x @ (Q @ x)) - f @ x
            running = exact
            if exact < best_val:
                best_val = exact
                for r in range(n):
                    best_x[r] = x[r]
    return best_val, best_x


def _eigh_numpy(a):
    w, v = np.linalg.eigh(a)
    return w, v


def _enum_signs_numpy(Q, f, chunk_bits: int = 14):
    n = Q.shape[0]
    total = 1 << n
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    best_val = math.inf
    best_x = np.full(n, -1.0)
    step = 1 << min(chunk_bits, n)
    for start in range(0, total, step):
        ks = np.arange(start, min(start + step, total), dtype=np.int64)
        X = (((ks[:, None] >> shifts[None, :]) & 1) * 2 - 1).astype(np.float64)
        vals = 0.5 * np.einsum("ij,ij->i", X, X @ Q) - X @ f
        idx = int(np.argmin(vals))
        if vals[idx] < best_val:
            best_val = float(vals[idx])
            best_x = X[idx].copy()
    return best_val, best_x


_BACKEND = "numpy"
jacobi_eigh = _eigh_numpy
enum_signs = _enum_signs_numpy


def use_backend(name: str) -> str:
    """Bind the kernel dispatch to 'numba' or 'numpy'; returns the one in effect."""
    global _BACKEND, jacobi_eigh, enum_signs
    if name == "numba" and NUMBA_AVAILABLE:
        global _jacobi_njit, _enum_njit
        if "_jacobi_njit" not in globals():
            _jacobi_njit = njit(cache=True)(_jacobi_eigh_impl)
            _enum_njit = njit(cache=True)(_enum_signs_impl)
        jacobi_eigh = _jacobi_njit
        enum_signs = lambda Q, f: _enum_njit(np.ascontiguousarray(Q), np.ascontiguousarray(f))
        _BACKEND = "numba"
    else:
        jacobi_eigh = _eigh_numpy
        enum_signs = _enum_signs_numpy
        _BACKEND = "numpy"
    return _BACKEND


def backend_name() -> str:
    return _BACKEND


_env_flag = os.environ.get("CANON_DUAL_PURE_NUMPY", "").strip()
use_backend("numpy" if _env_flag not in ("", "0") else "numba")
