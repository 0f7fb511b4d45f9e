"""Bipartite density matrices and their pure-state ensembles.

Vectors on the joint space are indexed row-major, ``i * n + j``, so a
joint vector reshapes to its ``m x n`` coefficient matrix ``a[i, j]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import (
    DimensionMismatch,
    EmptyDecomposition,
    NotHermitian,
    NotIsometry,
    NotPSD,
    StateError,
    TraceNotOne,
)


@dataclass(frozen=True)
class BipartiteDims:
    m: int
    n: int

    def __post_init__(self):
        if int(self.m) != self.m or int(self.n) != self.n or self.m < 1 or self.n < 1:
            raise DimensionMismatch(f"invalid bipartite dimensions ({self.m}, {self.n})")

    @property
    def total(self) -> int:
        return self.m * self.n

    def as_tuple(self) -> tuple[int, int]:
        return (self.m, self.n)


def _as_dims(dims) -> BipartiteDims:
    if isinstance(dims, BipartiteDims):
        return dims
    m, n = dims
    return BipartiteDims(int(m), int(n))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated state.

    ``eigenvalues`` are sorted in descending order and clipped at zero;
    ``eigenvectors[:, k]`` belongs to ``eigenvalues[k]``.
    """

    dims: BipartiteDims
    entries: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    rank: int

    @property
    def eigenpairs(self):
        return [(float(lam), self.eigenvectors[:, k]) for k, lam in enumerate(self.eigenvalues)]


@dataclass(frozen=True, eq=False)
class PureComponent:
    """Sub-normalized ensemble member stored as its coefficient matrix."""

    coeffs: np.ndarray

    @property
    def weight(self) -> float:
        return float(np.vdot(self.coeffs, self.coeffs).real)

    @property
    def vector(self) -> np.ndarray:
        return self.coeffs.reshape(-1)


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Ensemble of ``K`` sub-normalized pure components.

    ``coeffs`` has shape ``(K, m, n)``.
    """

    dims: BipartiteDims
    coeffs: np.ndarray

    def __post_init__(self):
        c = self.coeffs
        if c.ndim != 3 or c.shape[1:] != self.dims.as_tuple():
            raise DimensionMismatch(
                f"coefficient array of shape {c.shape} does not match dims {self.dims.as_tuple()}"
            )

    def __len__(self) -> int:
        return self.coeffs.shape[0]

    @property
    def components(self) -> list[PureComponent]:
        return [PureComponent(a) for a in self.coeffs]

    @property
    def vectors(self) -> np.ndarray:
        """``(K, m*n)`` matrix whose rows are the joint vectors."""
        return self.coeffs.reshape(len(self), -1)

    @classmethod
    def from_vectors(cls, dims, vectors) -> "Decomposition":
        dims = _as_dims(dims)
        v = np.asarray(vectors, dtype=complex)
        return cls(dims, v.reshape(v.shape[0], dims.m, dims.n))


def fix_phase(vec: np.ndarray) -> np.ndarray:
    """Rotate ``vec`` so its largest-magnitude entry is real and positive."""
    k = int(np.argmax(np.abs(vec)))
    if vec[k] == 0:
        return vec
    return vec * (abs(vec[k]) / vec[k])


def validate_state(entries, dims, tol: Tolerances = DEFAULT_TOLERANCES) -> DensityMatrix:
    """Check a candidate density matrix and diagonalize it.

    Parameters
    ----------
    entries : array_like
        Square complex matrix of side ``m * n``.
    dims : BipartiteDims or (m, n)
    tol : Tolerances

    Raises
    ------
    DimensionMismatch, NotHermitian, NotPSD, TraceNotOne
    """
    dims = _as_dims(dims)
    rho = np.array(entries, dtype=complex)
    if rho.ndim != 2 or rho.shape != (dims.total, dims.total):
        raise DimensionMismatch(
            f"matrix of shape {rho.shape} does not match dims {dims.as_tuple()}"
        )
    if not np.all(np.isfinite(rho)):
        raise StateError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(rho))))
    if np.max(np.abs(rho - rho.conj().T)) > tol.herm * scale:
        raise NotHermitian("matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol.trace:
        raise TraceNotOne(f"trace is {tr!r}, expected 1")
    rho = 0.5 * (rho + rho.conj().T)
    w, v = np.linalg.eigh(rho)
    if w[0] < -tol.psd:
        raise NotPSD(f"smallest eigenvalue {w[0]!r} is negative")
    w = np.clip(w[::-1], 0.0, None)
    v = v[:, ::-1]
    v = np.column_stack([fix_phase(v[:, k]) for k in range(v.shape[1])])
    rank = int(np.sum(w > tol.rank * w[0]))
    rho.setflags(write=False)
    return DensityMatrix(dims=dims, entries=rho, eigenvalues=w, eigenvectors=v, rank=rank)


def eigen_components(state: DensityMatrix) -> Decomposition:
    """Eigen-ensemble ``a^mu = reshape(sqrt(lambda_mu) * v_mu)`` over the numerical rank."""
    r = state.rank
    vecs = state.eigenvectors[:, :r] * np.sqrt(state.eigenvalues[:r])
    return Decomposition.from_vectors(state.dims, vecs.T)


def check_isometry(V, tol: float = DEFAULT_TOLERANCES.iso) -> np.ndarray:
    V = np.asarray(V, dtype=complex)
    if V.ndim != 2 or V.shape[0] < V.shape[1]:
        raise NotIsometry(f"a {V.shape} matrix cannot be an isometry")
    err = np.linalg.norm(V.conj().T @ V - np.eye(V.shape[1]))
    if err > tol:
        raise NotIsometry(f"V^dagger V deviates from identity by {err:.3e}")
    return V


def apply_decomposition_change(d: Decomposition, V, tol: float = DEFAULT_TOLERANCES.iso) -> Decomposition:
    """New ensemble ``b^mu = sum_nu V[mu, nu] a^nu`` for an isometry ``V``."""
    V = check_isometry(V, tol)
    if V.shape[1] != len(d):
        raise DimensionMismatch(f"V has {V.shape[1]} columns but the ensemble has {len(d)} members")
    return Decomposition(d.dims, np.einsum("kn,nij->kij", V, d.coeffs))


def reconstruct_density(d: Decomposition) -> np.ndarray:
    if len(d) == 0:
        raise EmptyDecomposition("cannot reconstruct from an empty ensemble")
    X = d.vectors
    return X.T @ X.conj()


# JSON state format: {"dims": [m, n], "matrix": [[[re, im], ...], ...]}

def state_to_json(entries, dims) -> dict:
    dims = _as_dims(dims)
    rho = np.asarray(entries, dtype=complex)
    return {
        "dims": [dims.m, dims.n],
        "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in rho],
    }


def state_from_json(obj) -> tuple[np.ndarray, BipartiteDims]:
    try:
        m, n = obj["dims"]
        rows = obj["matrix"]
        arr = np.array(rows, dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise StateError(f"malformed state object: {exc}") from None
    dims = _as_dims((m, n))
    side = dims.total
    if arr.shape != (side, side, 2):
        raise DimensionMismatch(f"matrix field has shape {arr.shape}, expected ({side}, {side}, 2)")
    return arr[..., 0] + 1j * arr[..., 1], dims


def load_state(path, tol: Tolerances = DEFAULT_TOLERANCES) -> DensityMatrix:
    with open(path) as fh:
        obj = json.load(fh)
    entries, dims = state_from_json(obj)
    return validate_state(entries, dims, tol)


def save_state(path, entries, dims) -> None:
    Path(path).write_text(json.dumps(state_to_json(entries, dims)) + "\n")
