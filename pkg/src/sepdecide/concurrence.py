"""Concurrence vectors, concurrence matrices and the biconcurrence operator.

Symmetric ``r x r`` matrices are identified with vectors of length
``r (r + 1) / 2`` through the orthonormal basis ``E_mm`` and
``(E_mn + E_nm) / sqrt(2)`` for ``m < n``, pairs ordered row-major over the
upper triangle.  In that basis the biconcurrence is a plain Gram matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .config import DEFAULT_TOLERANCES
from .errors import DimensionMismatch
from .state import BipartiteDims, Decomposition, PureComponent, _as_dims, check_isometry


class MinorIndex(NamedTuple):
    i: int
    k: int
    j: int
    l: int


def count_indices(dims) -> int:
    dims = _as_dims(dims)
    m, n = dims.m, dims.n
    return m * n * (m - 1) * (n - 1) // 4


def minor_indices(dims) -> list[MinorIndex]:
    """All ``(i < k, j < l)`` minor positions, lexicographic in ``(i, k, j, l)``."""
    dims = _as_dims(dims)
    return [
        MinorIndex(i, k, j, l)
        for i in range(dims.m)
        for k in range(i + 1, dims.m)
        for j in range(dims.n)
        for l in range(j + 1, dims.n)
    ]


def _minor_arrays(dims):
    idx = np.array(minor_indices(dims), dtype=np.intp).reshape(-1, 4)
    return idx[:, 0], idx[:, 1], idx[:, 2], idx[:, 3]


def pure_concurrence_vector(c) -> np.ndarray:
    """Doubled 2x2 minors ``2 (a_ij a_kl - a_il a_kj)`` of a coefficient matrix."""
    a = c.coeffs if isinstance(c, PureComponent) else np.asarray(c, dtype=complex)
    i, k, j, l = _minor_arrays(a.shape)
    return 2 * (a[i, j] * a[k, l] - a[i, l] * a[k, j])


def pure_concurrence(c) -> float:
    return float(np.linalg.norm(pure_concurrence_vector(c)))


@dataclass(frozen=True, eq=False)
class ConcurrenceFamily:
    """A stack of symmetric ``r x r`` matrices with their labels.

    ``labels`` are MinorIndex values for concurrence matrices and integer
    eigenvalue ranks for biconcurrence eigen-matrices.
    """

    matrices: np.ndarray
    labels: tuple
    r: int

    def __post_init__(self):
        M = self.matrices
        if M.ndim != 3 or M.shape[1:] != (self.r, self.r):
            raise DimensionMismatch(f"family array of shape {M.shape} is not a stack of {self.r}x{self.r}")
        if len(self.labels) != M.shape[0]:
            raise DimensionMismatch("one label per matrix required")

    def __len__(self) -> int:
        return self.matrices.shape[0]

    def is_symmetric(self, tol: float = DEFAULT_TOLERANCES.sym) -> bool:
        M = self.matrices
        if len(M) == 0:
            return True
        scale = max(1.0, float(np.max(np.abs(M))))
        return bool(np.max(np.abs(M - M.transpose(0, 2, 1))) <= tol * scale)


def build_family(d: Decomposition) -> ConcurrenceFamily:
    A = d.coeffs
    labels = minor_indices(d.dims)
    i, k, j, l = _minor_arrays(d.dims)
    # X[s, mu, nu] = a^mu_ij a^nu_kl - a^mu_il a^nu_kj, so C = X + X^T
    X = A[:, i, j].T[:, :, None] * A[:, k, l].T[:, None, :]
    X = X - A[:, i, l].T[:, :, None] * A[:, k, j].T[:, None, :]
    C = X + X.transpose(0, 2, 1)
    return ConcurrenceFamily(C, tuple(labels), len(d))


def transform_family(f: ConcurrenceFamily, V, tol: float = DEFAULT_TOLERANCES.iso) -> ConcurrenceFamily:
    """Map every matrix to ``V C V^T`` (plain transpose) for an isometry ``V``."""
    V = check_isometry(V, tol)
    if V.shape[1] != f.r:
        raise DimensionMismatch(f"V has {V.shape[1]} columns, family has r = {f.r}")
    M = np.einsum("ka,sab,lb->skl", V, f.matrices, V)
    return ConcurrenceFamily(M, f.labels, V.shape[0])


def sym_pairs(r: int) -> list[tuple[int, int]]:
    return [(a, b) for a in range(r) for b in range(a, r)]


def sym_vec(M: np.ndarray) -> np.ndarray:
    """Coordinates of symmetric matrices (last two axes) in the orthonormal basis."""
    r = M.shape[-1]
    ia, ib = np.triu_indices(r)
    w = np.where(ia == ib, 1.0, np.sqrt(2.0))
    return M[..., ia, ib] * w


def sym_unvec(v: np.ndarray, r: int) -> np.ndarray:
    ia, ib = np.triu_indices(r)
    w = np.where(ia == ib, 1.0, 1 / np.sqrt(2.0))
    out = np.zeros(v.shape[:-1] + (r, r), dtype=complex)
    out[..., ia, ib] = v * w
    out[..., ib, ia] = v * w
    return out


@dataclass(frozen=True, eq=False)
class Biconcurrence:
    entries: np.ndarray
    r: int

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)


def build_biconcurrence(f: ConcurrenceFamily) -> Biconcurrence:
    """``B = sum_s |c_s><c_s|`` with ``c_s`` the basis coordinates of ``C_s``."""
    dim = f.r * (f.r + 1) // 2
    if len(f) == 0:
        return Biconcurrence(np.zeros((dim, dim), dtype=complex), f.r)
    c = sym_vec(f.matrices)
    B = c.T @ c.conj()
    B = 0.5 * (B + B.conj().T)
    return Biconcurrence(B, f.r)


def extract_T(b: Biconcurrence, r: int | None = None, rank_tol: float = DEFAULT_TOLERANCES.rank) -> ConcurrenceFamily:
    """Eigen-matrices of ``B`` for nonzero eigenvalues, scaled by ``sqrt(eigenvalue)``.

    Ordered by decreasing eigenvalue; each is phase-fixed so that its
    largest-magnitude basis coordinate is real positive.
    """
    r = b.r if r is None else r
    w, v = np.linalg.eigh(b.entries)
    w, v = w[::-1], v[:, ::-1]
    if len(w) == 0 or w[0] <= 0:
        return ConcurrenceFamily(np.zeros((0, r, r), dtype=complex), (), r)
    keep = w > rank_tol * w[0]
    cols = []
    for k in np.flatnonzero(keep):
        vec = v[:, k]
        p = int(np.argmax(np.abs(vec)))
        vec = vec * (abs(vec[p]) / vec[p])
        cols.append(np.sqrt(w[k]) * vec)
    T = sym_unvec(np.array(cols), r)
    return ConcurrenceFamily(T, tuple(range(len(cols))), r)


def g0_form(b: Biconcurrence, U, tol: float = DEFAULT_TOLERANCES.iso) -> float:
    """Quartic form ``sum_i s_i^T B conj(s_i)`` where ``s_i`` encodes ``U[i] U[i]^T``."""
    U = check_isometry(U, tol)
    if U.shape[1] != b.r:
        raise DimensionMismatch(f"U has {U.shape[1]} columns, biconcurrence has r = {b.r}")
    S = sym_vec(U[:, :, None] * U[:, None, :])
    val = np.einsum("ia,ab,ib->", S, b.entries, S.conj()).real
    return max(float(val), 0.0)


def g0_direct(f: ConcurrenceFamily, U) -> float:
    """``sum_i sum_s |(U C_s U^T)_ii|^2`` evaluated straight from the family."""
    U = np.asarray(U, dtype=complex)
    d = np.einsum("ia,sab,ib->is", U, f.matrices, U)
    return float(np.sum(np.abs(d) ** 2))
