"""Hot GF(q) matrix kernels with a numba backend and a pure-numpy fallback.

Everything downstream (canonical forms, subspace algebra, encoding, decoding,
density evolution) funnels its inner loops through the three functions
exported here:

    rref_mod(a, q)    -> (rref matrix, rank, pivot columns)
    rank_mod(a, q)    -> rank
    matmul_mod(a, b, q)

Both backends run the same exact integer algorithm and return identical
results; the backend only changes speed.  Selection is controlled by the
environment variable ``SNCLAB_BACKEND``:

    auto   (default) use numba when importable, else numpy
    numba  require the numba backend
    numpy  force the pure-numpy fallback

Matrices are dense ``numpy.int64`` arrays with entries in ``[0, q)`` for a
prime modulus ``q < 2**16`` (products stay far below int64 overflow).
"""

from __future__ import annotations

import os

import numpy as np

DTYPE = np.int64

_ENV_VAR = "SNCLAB_BACKEND"

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False


def _select_backend() -> str:
    choice = os.environ.get(_ENV_VAR, "auto").strip().lower() or "auto"
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(
            f"{_ENV_VAR} must be 'auto', 'numba' or 'numpy', got {choice!r}"
        )
    if choice == "numpy":
        return "numpy"
    if HAS_NUMBA:
        return "numba"
    if choice == "numba":
        raise ImportError(f"{_ENV_VAR}=numba but numba is not importable")
    return "numpy"


BACKEND = _select_backend()


# ---------------------------------------------------------------------------
# loop implementations (compiled by numba when available)
# ---------------------------------------------------------------------------


def _rref_loops(a, q):
    r = a.copy()
    rows, cols = r.shape
    piv = np.empty(min(rows, cols), dtype=DTYPE)
    rank = 0
    for col in range(cols):
        pivot_row = -1
        for i in range(rank, rows):
            if r[i, col] != 0:
                pivot_row = i
                break
        if pivot_row < 0:
            continue
        if pivot_row != rank:
            for j in range(col, cols):
                tmp = r[rank, j]
                r[rank, j] = r[pivot_row, j]
                r[pivot_row, j] = tmp
        # pivot inverse by Fermat: v^(q-2) mod q
        inv = 1
        base = r[rank, col] % q
        e = q - 2
        while e > 0:
            if e & 1:
                inv = (inv * base) % q
            base = (base * base) % q
            e >>= 1
        if inv != 1:
            for j in range(col, cols):
                r[rank, j] = (r[rank, j] * inv) % q
        for i in range(rows):
            if i != rank and r[i, col] != 0:
                f = r[i, col]
                for j in range(col, cols):
                    r[i, j] = (r[i, j] - f * r[rank, j]) % q
        piv[rank] = col
        rank += 1
        if rank == rows:
            break
    return r, rank, piv[:rank].copy()


def _matmul_loops(a, b, q):
    n, k = a.shape
    _, m = b.shape
    out = np.zeros((n, m), dtype=DTYPE)
    for i in range(n):
        for j in range(m):
            acc = 0
            for t in range(k):
                acc += a[i, t] * b[t, j]
            out[i, j] = acc % q
    return out


# ---------------------------------------------------------------------------
# pure-numpy fallback (vectorized row operations, same elimination order)
# ---------------------------------------------------------------------------


def _rref_numpy(a, q):
    r = a.copy()
    rows, cols = r.shape
    pivots = []
    rank = 0
    for col in range(cols):
        nz = np.nonzero(r[rank:, col])[0]
        if nz.size == 0:
            continue
        p = rank + int(nz[0])
        if p != rank:
            r[[rank, p]] = r[[p, rank]]
        v = int(r[rank, col])
        if v != 1:
            r[rank] = (r[rank] * pow(v, q - 2, q)) % q
        f = r[:, col].copy()
        f[rank] = 0
        r -= np.outer(f, r[rank])
        r %= q
        pivots.append(col)
        rank += 1
        if rank == rows:
            break
    return r, rank, np.array(pivots, dtype=DTYPE)


def _matmul_numpy(a, b, q):
    return (a @ b) % q


if HAS_NUMBA:
    _rref_numba = njit(cache=True, nogil=True)(_rref_loops)
    _matmul_numba = njit(cache=True, nogil=True)(_matmul_loops)
else:  # pragma: no cover
    _rref_numba = None
    _matmul_numba = None


if BACKEND == "numba":
    _rref_impl = _rref_numba
    _matmul_impl = _matmul_numba
else:
    _rref_impl = _rref_numpy
    _matmul_impl = _matmul_numpy


def rref_mod(a: np.ndarray, q: int):
    """Reduced row echelon form of ``a`` over F_q.

    Returns ``(r, rank, pivot_cols)``; ``r`` is the canonical RREF (unit
    pivots, zeros above and below, pivot columns strictly increasing).
    """
    a = np.ascontiguousarray(a, dtype=DTYPE)
    r, rank, piv = _rref_impl(a, q)
    return r, int(rank), piv


def rank_mod(a: np.ndarray, q: int) -> int:
    """Rank of ``a`` over F_q."""
    return rref_mod(a, q)[1]


def matmul_mod(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    """``a @ b`` over F_q."""
    a = np.ascontiguousarray(a, dtype=DTYPE)
    b = np.ascontiguousarray(b, dtype=DTYPE)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"shape mismatch for matmul: {a.shape} x {b.shape}")
    return _matmul_impl(a, b, q)
