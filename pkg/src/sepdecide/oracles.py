"""Independent entanglement tests and seeded state generators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .concurrence import pure_concurrence
from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import NotPure, RankOutOfRange
from .state import DensityMatrix, _as_dims, eigen_components, validate_state

SEPARABLE = "separable_certified"
ENTANGLED = "entangled_certified"
INCONCLUSIVE = "inconclusive"

# dimensions where a positive partial transpose implies separability
PPT_EXACT = {(2, 2), (2, 3), (3, 2)}


@dataclass(frozen=True)
class OracleVerdict:
    name: str
    outcome: str
    witness_value: float

    def to_dict(self) -> dict:
        return {"name": self.name, "outcome": self.outcome, "witness_value": float(self.witness_value)}


def ppt_exact(dims) -> bool:
    dims = _as_dims(dims)
    return dims.as_tuple() in PPT_EXACT or dims.m == 1 or dims.n == 1


def partial_transpose(rho, dims) -> np.ndarray:
    """Transpose subsystem B."""
    dims = _as_dims(dims)
    m, n = dims.m, dims.n
    return np.asarray(rho).reshape(m, n, m, n).transpose(0, 3, 2, 1).reshape(m * n, m * n)


def realign(rho, dims) -> np.ndarray:
    """``R[(i, a), (j, b)] = rho[(i, j), (a, b)]``, an ``m^2 x n^2`` matrix."""
    dims = _as_dims(dims)
    m, n = dims.m, dims.n
    return np.asarray(rho).reshape(m, n, m, n).transpose(0, 2, 1, 3).reshape(m * m, n * n)


def ppt_test(state: DensityMatrix, tol: Tolerances = DEFAULT_TOLERANCES) -> OracleVerdict:
    pt = partial_transpose(state.entries, state.dims)
    lam = float(np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))[0])
    if lam < -tol.psd:
        outcome = ENTANGLED
    elif ppt_exact(state.dims):
        outcome = SEPARABLE
    else:
        outcome = INCONCLUSIVE
    return OracleVerdict("ppt", outcome, lam)


def realignment_test(state: DensityMatrix, tol: Tolerances = DEFAULT_TOLERANCES) -> OracleVerdict:
    s = np.linalg.svd(realign(state.entries, state.dims), compute_uv=False)
    excess = float(np.sum(s) - 1.0)
    return OracleVerdict("realignment", ENTANGLED if excess > tol.feas else INCONCLUSIVE, excess)


def pure_separability(state: DensityMatrix, tol: Tolerances = DEFAULT_TOLERANCES) -> OracleVerdict:
    if state.rank != 1:
        raise NotPure(f"state has rank {state.rank}")
    c = pure_concurrence(eigen_components(state).coeffs[0])
    return OracleVerdict("pure", SEPARABLE if c <= tol.sep else ENTANGLED, c)


ORACLES = {
    "ppt": ppt_test,
    "realignment": realignment_test,
    "pure": pure_separability,
}


# --------------------------------------------------------------------------
# generators


def _rng(seed):
    return np.random.default_rng(seed)


def random_ket(d: int, rng) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def gen_product_mixture(dims, terms: int, seed=None, tol: Tolerances = DEFAULT_TOLERANCES) -> DensityMatrix:
    """Random convex mixture of ``terms`` product projectors.

    Local vectors are Haar-random, weights uniform on the simplex.
    """
    if terms < 1:
        raise ValueError("terms must be at least 1")
    dims = _as_dims(dims)
    rng = _rng(seed)
    p = rng.dirichlet(np.ones(terms))
    rho = np.zeros((dims.total, dims.total), dtype=complex)
    for t in range(terms):
        v = np.kron(random_ket(dims.m, rng), random_ket(dims.n, rng))
        rho += p[t] * np.outer(v, v.conj())
    rho /= np.trace(rho).real
    return validate_state(rho, dims, tol)


def gen_random_state(dims, rank: int, seed=None, tol: Tolerances = DEFAULT_TOLERANCES) -> DensityMatrix:
    """``G G^dagger / tr`` with ``G`` an ``(mn) x rank`` complex Gaussian matrix."""
    dims = _as_dims(dims)
    if not 1 <= rank <= dims.total:
        raise RankOutOfRange(f"rank {rank} outside [1, {dims.total}]")
    rng = _rng(seed)
    G = rng.standard_normal((dims.total, rank)) + 1j * rng.standard_normal((dims.total, rank))
    rho = G @ G.conj().T
    rho /= np.trace(rho).real
    return validate_state(rho, dims, tol)


def bell_state(tol: Tolerances = DEFAULT_TOLERANCES) -> DensityMatrix:
    v = np.zeros(4, dtype=complex)
    v[0] = v[3] = 1 / np.sqrt(2)
    return validate_state(np.outer(v, v.conj()), (2, 2), tol)


def werner_state(p: float, tol: Tolerances = DEFAULT_TOLERANCES) -> DensityMatrix:
    """``p |Phi+><Phi+| + (1 - p) I / 4``."""
    v = np.zeros(4, dtype=complex)
    v[0] = v[3] = 1 / np.sqrt(2)
    rho = p * np.outer(v, v.conj()) + (1 - p) * np.eye(4) / 4
    return validate_state(rho, (2, 2), tol)


def gen_pure_state(dims, seed=None, tol: Tolerances = DEFAULT_TOLERANCES) -> DensityMatrix:
    dims = _as_dims(dims)
    v = random_ket(dims.total, _rng(seed))
    return validate_state(np.outer(v, v.conj()), dims, tol)

