"""Numeric inner loops with a numba path and a pure-numpy path.

The numba path is used when numba imports and ``SEPDECIDE_DISABLE_NUMBA``
is unset (or ``0``).  Both paths return identical results up to floating
point rounding; the elimination kernels make the same pivot choices.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit
    from numba.extending import register_jitable

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def register_jitable(fn):
        return fn

_BACKEND = (
    "numba"
    if HAVE_NUMBA and os.environ.get("SEPDECIDE_DISABLE_NUMBA", "0") in ("", "0")
    else "numpy"
)


def get_backend() -> str:
    return _BACKEND


def set_backend(name: str) -> None:
    global _BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not available")
    _BACKEND = name


# --------------------------------------------------------------------------
# Macaulay matrix fill


def _fill_np(T, col_idx, pairs, ncols):
    N = T.shape[0]
    P = col_idx.shape[0]
    a, b = pairs[:, 0], pairs[:, 1]
    coef = T[:, a, b] * np.where(a == b, 1.0, 2.0)
    M = np.zeros((N, P, ncols), dtype=np.complex128)
    M[:, np.arange(P)[:, None], col_idx] = coef[:, None, :]
    return M.reshape(N * P, ncols)


def _fill_impl(T, col_idx, pairs, ncols):
    N = T.shape[0]
    P = col_idx.shape[0]
    Q = pairs.shape[0]
    M = np.zeros((N * P, ncols), dtype=np.complex128)
    for s in range(N):
        for p in range(P):
            row = s * P + p
            for q in range(Q):
                a = pairs[q, 0]
                b = pairs[q, 1]
                c = T[s, a, b]
                if a != b:
                    c = 2.0 * c
                M[row, col_idx[p, q]] = c
    return M


# --------------------------------------------------------------------------
# Gaussian elimination, complete pivoting restricted to successive column blocks


def _eliminate_impl(A, bounds, tol):
    nr, nc = A.shape
    nb = bounds.shape[0] - 1
    piv = np.empty(min(nr, nc), dtype=np.int64)
    ranks = np.zeros(nb, dtype=np.int64)
    used = np.zeros(nc, dtype=np.bool_)
    tol2 = tol * tol
    row = 0
    for b in range(nb):
        c0 = bounds[b]
        c1 = bounds[b + 1]
        while row < nr:
            best = -1.0
            bi = -1
            bj = -1
            for i in range(row, nr):
                for j in range(c0, c1):
                    if not used[j]:
                        z = A[i, j]
                        v = z.real * z.real + z.imag * z.imag
                        if v > best:
                            best = v
                            bi = i
                            bj = j
            if bj < 0 or best <= tol2:
                break
            if bi != row:
                for j in range(nc):
                    t = A[row, j]
                    A[row, j] = A[bi, j]
                    A[bi, j] = t
            used[bj] = True
            piv[row] = bj
            pv = A[row, bj]
            for i in range(row + 1, nr):
                f = A[i, bj] / pv
                if f != 0:
                    for j in range(c0, nc):
                        A[i, j] -= f * A[row, j]
                A[i, bj] = 0.0
            row += 1
            ranks[b] += 1
    return A, piv[:row].copy(), ranks


def _eliminate_np(A, bounds, tol):
    nr, nc = A.shape
    nb = len(bounds) - 1
    piv = []
    ranks = np.zeros(nb, dtype=np.int64)
    used = np.zeros(nc, dtype=bool)
    tol2 = tol * tol
    row = 0
    for b in range(nb):
        c0, c1 = int(bounds[b]), int(bounds[b + 1])
        while row < nr and c1 > c0:
            sub = A[row:, c0:c1]
            mag = sub.real ** 2 + sub.imag ** 2
            mag[:, used[c0:c1]] = -1.0
            flat = int(np.argmax(mag))
            bi, bj = divmod(flat, c1 - c0)
            if mag[bi, bj] <= tol2:
                break
            bi += row
            bj += c0
            if bi != row:
                A[[row, bi]] = A[[bi, row]]
            used[bj] = True
            piv.append(bj)
            f = A[row + 1:, bj] / A[row, bj]
            A[row + 1:, c0:] -= np.outer(f, A[row, c0:])
            A[row + 1:, bj] = 0.0
            row += 1
            ranks[b] += 1
    return A, np.array(piv, dtype=np.int64), ranks


# --------------------------------------------------------------------------
# Projected descent on the quartic form over isometries


@register_jitable
def _polar_py(X):
    W, _, Vh = np.linalg.svd(X, full_matrices=False)
    return W @ Vh


@register_jitable
def _g0_grad_py(U, T):
    K, r = U.shape
    N = T.shape[0]
    G = np.zeros((K, r), dtype=np.complex128)
    f = 0.0
    for s in range(N):
        TU = U @ T[s]
        d = np.sum(U * TU, axis=1)
        f += np.sum(d.real * d.real + d.imag * d.imag)
        G += 4.0 * d.reshape(K, 1) * np.conj(TU)
    return f, G


@register_jitable
def _g0_only_py(U, T):
    f = 0.0
    for s in range(T.shape[0]):
        d = np.sum(U * (U @ T[s]), axis=1)
        f += np.sum(d.real * d.real + d.imag * d.imag)
    return f


def _descend_py(U0, T, steps, target, stall_window, stall_ratio):
    # Riemannian gradient descent, polar retraction, Armijo backtracking
    # with Barzilai-Borwein trial steps.
    U = _polar_py(U0)
    f, G = _g0_grad_py(U, T)
    eta = 1.0
    hist = np.empty(steps + 1)
    hist[0] = f
    it = 0
    prevU = U.copy()
    prevR = np.zeros_like(U)
    Un = U.copy()
    for k in range(1, steps + 1):
        if f <= target:
            break
        S = U.conj().T @ G
        R = G - U @ (0.5 * (S + S.conj().T))
        gn2 = np.sum(R.real * R.real + R.imag * R.imag)
        if gn2 == 0.0:
            break
        if k > 1:
            dU = U - prevU
            dR = R - prevR
            num = np.sum(dU.real * dU.real + dU.imag * dU.imag)
            den = abs(np.sum(dU.real * dR.real + dU.imag * dR.imag))
            if den > 0.0:
                eta = min(max(num / den, 1e-12), 1e6)
        accepted = False
        fn = f
        for _ in range(40):
            Un = _polar_py(U - eta * R)
            fn = _g0_only_py(Un, T)
            if fn <= f - 1e-4 * eta * gn2:
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            break
        prevU = U
        prevR = R
        U = Un
        f, G = _g0_grad_py(U, T)
        it = k
        hist[k] = f
        if k >= stall_window and f > target:
            if f > stall_ratio * hist[k - stall_window]:
                break
    return U, f, it


if HAVE_NUMBA:
    _fill_nb = njit(cache=True)(_fill_impl)
    _eliminate_nb = njit(cache=True)(_eliminate_impl)
    _g0_grad_nb = njit(cache=True)(_g0_grad_py)
    _descend_nb = njit(cache=True)(_descend_py)


# --------------------------------------------------------------------------
# dispatch


def fill_macaulay(T, col_idx, pairs, ncols):
    T = np.ascontiguousarray(T, dtype=np.complex128)
    col_idx = np.ascontiguousarray(col_idx, dtype=np.int64)
    pairs = np.ascontiguousarray(pairs, dtype=np.int64)
    if _BACKEND == "numba":
        return _fill_nb(T, col_idx, pairs, int(ncols))
    return _fill_np(T, col_idx, pairs, int(ncols))


def block_eliminate(A, bounds, tol):
    """Row-echelon form with complete pivoting inside each column block.

    Parameters
    ----------
    A : ndarray, complex, (rows, cols)
        Copied, never modified.
    bounds : sequence of int
        Block boundaries ``0 = b0 < b1 < ... = cols``.
    tol : float
        Absolute pivot threshold; a block stops when no remaining entry
        exceeds it.

    Returns
    -------
    echelon : ndarray
        Rows permuted so that pivot ``i`` sits in row ``i``.
    pivots : ndarray of int
        Pivot column of each pivot row.
    block_ranks : ndarray of int
    """
    A = np.array(A, dtype=np.complex128, order="C", copy=True)
    bounds = np.ascontiguousarray(bounds, dtype=np.int64)
    if _BACKEND == "numba":
        return _eliminate_nb(A, bounds, float(tol))
    return _eliminate_np(A, bounds, float(tol))


def g0_value_grad(U, T):
    U = np.ascontiguousarray(U, dtype=np.complex128)
    T = np.ascontiguousarray(T, dtype=np.complex128)
    if _BACKEND == "numba":
        return _g0_grad_nb(U, T)
    return _g0_grad_py(U, T)


def descend(U0, T, steps, target, stall_window=200, stall_ratio=0.995):
    U0 = np.ascontiguousarray(U0, dtype=np.complex128)
    T = np.ascontiguousarray(T, dtype=np.complex128)
    if _BACKEND == "numba":
        return _descend_nb(U0, T, int(steps), float(target), int(stall_window), float(stall_ratio))
    return _descend_py(U0, T, int(steps), float(target), int(stall_window), float(stall_ratio))
