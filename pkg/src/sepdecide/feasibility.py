"""Weights that turn a finite set of candidate rows into an isometry.

Given rows ``u_k`` we look for ``w_k >= 0`` with
``sum_k w_k u_k u_k^dagger = I``; stacking ``sqrt(w_k) u_k`` then gives
``U`` with ``U^dagger U = I`` (up to complex conjugation, which leaves the
identity unchanged).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .concurrence import pure_concurrence
from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import CertificateCheckFailed
from .state import Decomposition, reconstruct_density


@dataclass(frozen=True, eq=False)
class GramSystem:
    A: np.ndarray
    b: np.ndarray
    r: int


@dataclass(frozen=True, eq=False)
class WeightVector:
    weights: np.ndarray
    residual: float
    feasible: bool


@dataclass(frozen=True, eq=False)
class SeparableCertificate:
    isometry: np.ndarray
    weights: np.ndarray
    rows: np.ndarray
    components: Decomposition
    reconstruction_error: float
    max_component_concurrence: float

    @property
    def product_components(self):
        return self.components.components

    def to_dict(self) -> dict:
        return {
            "weights": [float(w) for w in self.weights],
            "rows": [[[float(z.real), float(z.imag)] for z in row] for row in self.rows],
            "components": [
                [[[float(z.real), float(z.imag)] for z in line] for line in a]
                for a in self.components.coeffs
            ],
            "reconstruction_error": float(self.reconstruction_error),
            "max_component_concurrence": float(self.max_component_concurrence),
        }


def build_gram_constraints(rows) -> GramSystem:
    """Real linear system for the weights.

    One equation per diagonal entry, and a real and an imaginary equation
    per upper off-diagonal entry (scaled by ``sqrt(2)`` so the residual
    norm equals the Frobenius norm of ``sum w u u^dagger - I``).
    """
    U = np.atleast_2d(np.asarray(rows, dtype=complex))
    K, r = U.shape
    G = U[:, :, None] * U[:, None, :].conj()  # (K, r, r)
    ia, ib = np.triu_indices(r, 1)
    diag = np.arange(r)
    A = np.concatenate(
        [
            G[:, diag, diag].real.T,
            np.sqrt(2) * G[:, ia, ib].real.T,
            np.sqrt(2) * G[:, ia, ib].imag.T,
        ]
    )
    b = np.concatenate([np.ones(r), np.zeros(2 * len(ia))])
    return GramSystem(A, b, r)


def solve_nonnegative(sys: GramSystem, tol_feas: float = DEFAULT_TOLERANCES.feas) -> WeightVector:
    w, res = nnls(sys.A, sys.b)
    return WeightVector(w, float(res), bool(res <= tol_feas))


def assemble_certificate(
    rows,
    w: WeightVector,
    d: Decomposition,
    rho: np.ndarray,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> SeparableCertificate:
    """Turn feasible weights into product components and verify them.

    The stacked rows are re-orthonormalized by their polar factor before
    the components are formed, which removes the small isometry defect
    left by the least-squares weights.

    Raises
    ------
    CertificateCheckFailed
        If the isometry, reconstruction or concurrence checks fail.
    """
    U = np.atleast_2d(np.asarray(rows, dtype=complex))
    keep = w.weights > tol.weight
    if not np.any(keep):
        raise CertificateCheckFailed("no positive weights")
    V = np.sqrt(w.weights[keep])[:, None] * U[keep]
    return certificate_from_isometry(V, d, rho, tol, rows=U[keep], weights=w.weights[keep])


def certificate_from_isometry(V, d, rho, tol=DEFAULT_TOLERANCES, rows=None, weights=None):
    V = np.asarray(V, dtype=complex)
    defect = np.linalg.norm(V.conj().T @ V - np.eye(V.shape[1]))
    # the isometry condition holds up to conjugation; sum w u u^dag = I
    if defect > max(tol.feas, tol.iso) * 10:
        raise CertificateCheckFailed(f"rows are not an isometry (defect {defect:.3e})")
    W, _, Vh = np.linalg.svd(V, full_matrices=False)
    V = W @ Vh
    if np.linalg.norm(V.conj().T @ V - np.eye(V.shape[1])) > tol.iso:
        raise CertificateCheckFailed("polar factor is not an isometry")
    comps = Decomposition(d.dims, np.einsum("ka,aij->kij", V, d.coeffs))
    err = float(np.linalg.norm(reconstruct_density(comps) - rho))
    conc = max(pure_concurrence(a) for a in comps.coeffs)
    if err > tol.recon:
        raise CertificateCheckFailed(f"reconstruction error {err:.3e} exceeds {tol.recon:.1e}")
    if conc > tol.sep:
        raise CertificateCheckFailed(f"component concurrence {conc:.3e} exceeds {tol.sep:.1e}")
    if weights is None:
        weights = np.sum(np.abs(V) ** 2, axis=1)
    if rows is None:
        rows = V / np.sqrt(weights)[:, None]
    return SeparableCertificate(
        isometry=V,
        weights=np.asarray(weights, dtype=float),
        rows=np.asarray(rows, dtype=complex),
        components=comps,
        reconstruction_error=err,
        max_component_concurrence=float(conc),
    )
