"""Homogeneous quadratic systems ``u^T T_s u = 0`` solved by extended linearization.

Each equation is multiplied by every monomial of degree ``D - 2``; the
products are linear in the degree-``D`` monomials.  Gaussian elimination
with the monomials of the first two chart variables placed last leaves
relations among ``v0^D, v0^(D-1) v1, ..., v1^D`` only, which turn into a
univariate polynomial once ``v0 = 1``.  The monomials ``v0^(D-1) v_j`` are
placed just before them so that the remaining coordinates can be read off
linearly for every root.

Projective space is covered by charts: chart ``s`` fixes ``u_0 = ... =
u_(s-1) = 0`` and ``u_s = 1``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np
import scipy.linalg

from . import _kernels
from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import DegreeOverflow, SizeOverflow, ZeroPolynomial

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class QuadraticSystem:
    matrices: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.matrices, dtype=complex)
        if M.ndim == 2:
            M = M[None]
        if M.ndim != 3 or M.shape[1] != M.shape[2]:
            raise ValueError(f"expected a stack of square matrices, got shape {M.shape}")
        object.__setattr__(self, "matrices", M)

    @classmethod
    def from_family(cls, family) -> "QuadraticSystem":
        return cls(family.matrices)

    @property
    def r(self) -> int:
        return self.matrices.shape[1]

    def __len__(self) -> int:
        return self.matrices.shape[0]

    def normalized(self, drop_tol: float = DEFAULT_TOLERANCES.pivot) -> np.ndarray:
        """Symmetrized matrices scaled to unit Frobenius norm, negligible ones dropped."""
        return _normalize(self.matrices, drop_tol)

    def evaluate(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=complex)
        return np.einsum("a,sab,b->s", u, self.matrices, u)

    def residual(self, u) -> float:
        """Largest ``|u^T T u|`` over the normalized equations at unit ``u``."""
        return _residual(self.normalized(), np.asarray(u, dtype=complex))


def _normalize(M, drop_tol):
    M = 0.5 * (M + M.transpose(0, 2, 1))
    if len(M) == 0:
        return M
    norms = np.linalg.norm(M, axis=(1, 2))
    keep = norms > drop_tol
    return M[keep] / norms[keep, None, None]


def _residual(Tn, u):
    nrm = np.linalg.norm(u)
    if nrm == 0 or len(Tn) == 0:
        return 0.0 if len(Tn) == 0 else math.inf
    u = u / nrm
    return float(np.max(np.abs(np.einsum("a,sab,b->s", u, Tn, u))))


# --------------------------------------------------------------------------
# degree planning


@dataclass(frozen=True)
class XLParameters:
    r: int
    n_eff: int
    delta: int
    D: int
    n_vars: int
    n_eqs: int

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "N_eff": self.n_eff,
            "delta": self.delta,
            "D": self.D,
            "n_eqs": self.n_eqs,
            "n_vars": self.n_vars,
        }


def delta(r: int, n_eff: int) -> int:
    return n_eff - r + 1


def xl_parameters(r: int, n_eff: int, D: int) -> XLParameters:
    return XLParameters(
        r=r,
        n_eff=n_eff,
        delta=delta(r, n_eff),
        D=D,
        n_vars=math.comb(r + D - 1, D),
        n_eqs=n_eff * math.comb(r + D - 3, D - 2),
    )


def degree_admissible(r: int, n_eff: int, D: int) -> bool:
    """``C(r+D-1, D) - D <= N C(r+D-3, D-2)``, enough equations to leave one variable."""
    return math.comb(r + D - 1, D) - D <= n_eff * math.comb(r + D - 3, D - 2)


def select_degree(r: int, n_eff: int, d_max: int = 10) -> XLParameters:
    if r < 2:
        raise ValueError("degree selection needs at least two variables")
    for D in range(2, d_max + 1):
        if degree_admissible(r, n_eff, D):
            return xl_parameters(r, n_eff, D)
    raise DegreeOverflow(f"no degree D <= {d_max} is admissible for r={r}, N={n_eff}")


def _ceil_sqrt(x: int) -> int:
    s = math.isqrt(x)
    return s if s * s == x else s + 1


def estimate_degree_heuristic(r: int, n_eff: int) -> int:
    """Planning estimate of the degree XL needs, keyed on the margin ``N - r + 1``.

    Exactly determined systems (margin 0) need ``2**(r-1)``; margin 1 needs
    ``r``; margin 2 needs ``ceil(sqrt(r))``; otherwise, writing the number
    of equations as ``eps * r**2``, ``ceil(1 / sqrt(eps))``.
    """
    if r < 2:
        raise ValueError("r must be at least 2")
    dl = delta(r, n_eff)
    if dl == 0:
        return 2 ** (r - 1)
    if dl == 1:
        return r
    if dl == 2:
        return _ceil_sqrt(r)
    # smallest x with x**2 * N >= r**2
    x = max(1, math.isqrt(r * r // n_eff))
    while x * x * n_eff < r * r:
        x += 1
    while x > 1 and (x - 1) ** 2 * n_eff >= r * r:
        x -= 1
    return max(2, x)


# --------------------------------------------------------------------------
# expansion and elimination


@dataclass(frozen=True, eq=False)
class ExpandedSystem:
    """Macaulay matrix in chart column order.

    ``monomials[c]`` is the sorted variable-index tuple of column ``c``.
    Columns are grouped into ``bounds``: eliminated monomials, then
    ``v0^(D-1) v_j`` for ``j >= 2``, then ``v0^(D-p) v1^p`` for ``p = 0..D``.
    """

    matrix: np.ndarray
    monomials: list
    multipliers: list
    bounds: tuple
    D: int
    k: int


def _chart_columns(k: int, D: int) -> tuple[list, tuple]:
    trailing = [tuple([0] * (D - p) + [1] * p) for p in range(D + 1)]
    back = [tuple([0] * (D - 1) + [j]) for j in range(2, k)]
    special = set(trailing) | set(back)
    elim = [m for m in combinations_with_replacement(range(k), D) if m not in special]
    cols = elim + back + trailing
    bounds = (0, len(elim), len(elim) + len(back), len(cols))
    return cols, bounds


def expand_system(q, D: int, memory_budget: int = 200_000_000) -> ExpandedSystem:
    T = q.matrices if isinstance(q, QuadraticSystem) else np.asarray(q, dtype=complex)
    if D < 2:
        raise ValueError("expansion degree must be at least 2")
    N, k, _ = T.shape
    n_rows = N * math.comb(k + D - 3, D - 2)
    n_cols = math.comb(k + D - 1, D)
    if n_rows * n_cols > memory_budget:
        raise SizeOverflow(
            f"expanded system {n_rows} x {n_cols} exceeds the budget of {memory_budget} entries"
        )
    cols, bounds = _chart_columns(k, D)
    where = {m: c for c, m in enumerate(cols)}
    mults = list(combinations_with_replacement(range(k), D - 2))
    pairs = np.array([(a, b) for a in range(k) for b in range(a, k)], dtype=np.int64)
    col_idx = np.empty((len(mults), len(pairs)), dtype=np.int64)
    for p, m in enumerate(mults):
        for q_, (a, b) in enumerate(pairs):
            col_idx[p, q_] = where[tuple(sorted(m + (int(a), int(b))))]
    M = _kernels.fill_macaulay(T, col_idx, pairs, len(cols))
    return ExpandedSystem(M, cols, mults, bounds, D, k)


@dataclass(frozen=True, eq=False)
class Elimination:
    """Row-echelon data of an expanded system.

    ``relations`` holds the rows that involve only the trailing ``D + 1``
    monomials; ``back_rows``/``back_tail`` are the rows pivoted on the
    ``v0^(D-1) v_j`` block, split into that block and the trailing block.
    """

    D: int
    k: int
    rank: int
    block_ranks: tuple
    relations: np.ndarray
    back_rows: np.ndarray
    back_tail: np.ndarray
    scale: float


def _svd(A, full_matrices=False, compute_uv=True):
    # the divide-and-conquer driver occasionally fails to converge on
    # badly scaled expanded systems; QR iteration is slower but robust
    try:
        return np.linalg.svd(A, full_matrices=full_matrices, compute_uv=compute_uv)
    except np.linalg.LinAlgError:
        return scipy.linalg.svd(A, full_matrices=full_matrices, compute_uv=compute_uv, lapack_driver="gesvd")


def eliminate(
    sys: ExpandedSystem,
    tol_pivot: float = DEFAULT_TOLERANCES.pivot,
    method: str = "orthogonal",
) -> Elimination:
    """Split the row space of an expanded system by column block.

    ``method="orthogonal"`` works on an orthonormal basis of the row space
    (numerical rank from the singular values relative to the largest) and
    finds the combinations that vanish on leading blocks by further SVDs.
    ``method="gauss"`` uses block-wise complete-pivot elimination, which is
    faster but can leave rounding noise in the trailing block on
    ill-conditioned systems.
    """
    M = sys.matrix
    b0, b1, b2, b3 = sys.bounds
    scale = float(np.max(np.linalg.norm(M, axis=1))) if M.size else 0.0
    if scale == 0.0:
        return Elimination(sys.D, sys.k, 0, (0, 0, 0), np.zeros((0, b3 - b2), complex),
                           np.zeros((0, b2 - b1), complex), np.zeros((0, b3 - b2), complex), 0.0)
    if method == "gauss":
        return _eliminate_gauss(sys, tol_pivot, scale)
    if method != "orthogonal":
        raise ValueError(f"unknown elimination method {method!r}")
    _, s, Vh = _svd(M)
    rank = int(np.sum(s > tol_pivot * s[0]))
    R = Vh[:rank]
    # R is accurate to about noise / gap; anything well above that is a
    # genuine (if ill-conditioned) direction, not a vanishing combination
    floor = np.finfo(float).eps * np.sqrt(max(M.shape)) * s[0]
    noise = max(s[rank], floor) if rank < len(s) else floor
    thr = min(tol_pivot, 10.0 * noise / s[rank - 1]) if rank else tol_pivot

    def vanishing(c1):
        # orthonormal combinations of the rows of R that vanish on columns [0, c1)
        if c1 == 0:
            return np.eye(rank, dtype=complex)
        U, sv, _ = _svd(R[:, :c1], full_matrices=True)
        nz = int(np.sum(sv > thr))
        return U[:, nz:].conj().T

    after_elim = vanishing(b1) @ R
    rel = vanishing(b2) @ R
    re = rank - len(after_elim)
    rt = len(rel)
    rs = len(after_elim) - rt
    return Elimination(
        D=sys.D,
        k=sys.k,
        rank=rank,
        block_ranks=(re, rs, rt),
        relations=rel[:, b2:],
        back_rows=after_elim[:, b1:b2],
        back_tail=after_elim[:, b2:],
        scale=scale,
    )


def _eliminate_gauss(sys: ExpandedSystem, tol_pivot: float, scale: float) -> Elimination:
    M = sys.matrix
    b0, b1, b2, b3 = sys.bounds
    thr = tol_pivot * scale
    E, piv, ranks = _kernels.block_eliminate(M, (b0, b1, b2), thr)
    re, rs = int(ranks[0]), int(ranks[1])
    back_rows = E[re:re + rs, b1:b2]
    back_tail = E[re:re + rs, b2:b3]
    rel = E[re + rs:, b2:b3]
    if len(rel):
        s = _svd(rel, compute_uv=False)
        rt = int(np.sum(s > thr))
    else:
        rt = 0
    return Elimination(
        D=sys.D,
        k=sys.k,
        rank=re + rs + rt,
        block_ranks=(re, rs, rt),
        relations=rel,
        back_rows=back_rows,
        back_tail=back_tail,
        scale=scale,
    )


def to_univariate(el: Elimination, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray | None:
    """Lowest-degree polynomial in ``t = v1 / v0`` spanned by the trailing relations.

    Returns ascending coefficients, or ``None`` when no relation survives
    (the chart is not reducible at this degree).
    """
    rel = el.relations
    if el.block_ranks[2] == 0 or len(rel) == 0:
        return None
    _, s, Vh = _svd(rel)
    rho = el.block_ranks[2]
    V = Vh[:rho]
    D = rel.shape[1] - 1
    # look for a combination of the relations whose coefficients above
    # degree `deg` all vanish, increasing `deg` until one exists
    for deg in range(0, D + 1):
        top = V[:, deg + 1:]
        if top.shape[1] < rho:
            Ut = _svd(top, full_matrices=True)[0] if top.shape[1] else np.eye(rho)
            c = Ut[:, -1]
            break
        Ut, st, _ = _svd(top, full_matrices=True)
        if st[-1] <= tol.uni:
            c = Ut[:, -1]
            break
    else:  # pragma: no cover - the last iteration always breaks
        return None
    poly = c.conj() @ V[:, : deg + 1]
    nrm = np.linalg.norm(poly)
    if nrm == 0:
        return None
    poly = poly / nrm
    return poly


def find_roots(coeffs, tol_merge: float = DEFAULT_TOLERANCES.proj) -> list[tuple[complex, int]]:
    """Roots of an ascending-coefficient polynomial via companion eigenvalues.

    Roots within ``tol_merge`` (relative) are merged and their
    multiplicities summed.
    """
    c = np.asarray(coeffs, dtype=complex)
    if c.size == 0 or not np.any(c != 0):
        raise ZeroPolynomial("cannot take roots of the zero polynomial")
    roots = np.roots(c[::-1])
    out: list[list] = []
    for z in roots:
        for entry in out:
            if abs(z - entry[0]) <= tol_merge * max(1.0, abs(z)):
                entry[2].append(z)
                entry[1] += 1
                break
        else:
            out.append([z, 1, [z]])
    return [(complex(np.mean(e[2])), e[1]) for e in out]


# --------------------------------------------------------------------------
# projective solving


@dataclass
class ProjectiveSolutionSet:
    kind: str  # "empty" | "finite" | "positive_dimensional"
    points: list = field(default_factory=list)
    complete: bool = True
    diagnostics: dict = field(default_factory=dict)

    @property
    def is_finite(self) -> bool:
        return self.kind in ("empty", "finite")

    def as_array(self) -> np.ndarray:
        if not self.points:
            return np.zeros((0, 0), dtype=complex)
        return np.array(self.points)


def projective_normalize(u, tol: float = DEFAULT_TOLERANCES.proj) -> np.ndarray:
    """Scale so the first non-negligible coordinate equals one."""
    u = np.asarray(u, dtype=complex)
    big = np.max(np.abs(u))
    idx = int(np.flatnonzero(np.abs(u) > tol * big)[0])
    out = u / u[idx]
    out[:idx] = 0
    return out


def projective_distance(u, v) -> float:
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    cu = abs(np.vdot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v))
    return math.sqrt(max(0.0, 1.0 - min(1.0, cu) ** 2))


def polish(T, u, iters: int = 30) -> np.ndarray:
    """Gauss-Newton refinement with the largest coordinate held fixed."""
    u = np.array(u, dtype=complex)
    if len(T) == 0 or not np.all(np.isfinite(u)):
        return u
    fix = int(np.argmax(np.abs(u)))
    u = u / u[fix]
    free = [i for i in range(len(u)) if i != fix]
    if not free:
        return u
    best = u.copy()
    best_res = np.linalg.norm(np.einsum("a,sab,b->s", u, T, u))
    for _ in range(iters):
        F = np.einsum("a,sab,b->s", u, T, u)
        J = 2 * np.einsum("sab,b->sa", T, u)[:, free]
        dx = np.linalg.lstsq(J, -F, rcond=None)[0]
        u_new = u.copy()
        u_new[free] += dx
        if not np.all(np.isfinite(u_new)):
            break
        res = np.linalg.norm(np.einsum("a,sab,b->s", u_new, T, u_new))
        u = u_new
        if res < best_res:
            best, best_res = u.copy(), res
        if np.linalg.norm(dx) <= 1e-15 * (1 + np.linalg.norm(u)):
            break
    return best


@dataclass
class _Ctx:
    tol: Tolerances
    d_max: int
    budget: int
    extra: int
    charts: list


def _substitute(T, t):
    """Impose ``v1 = t v0``; the new variables are ``(v0, v2, ..., v_{k-1})``."""
    k = T.shape[1]
    P = np.zeros((k, k - 1), dtype=complex)
    P[0, 0] = 1.0
    P[1, 0] = t
    for j in range(2, k):
        P[j, j - 1] = 1.0
    return np.einsum("ai,sab,bj->sij", P, T, P)


def _solve_chart(T, ctx: _Ctx, depth: int = 0):
    """Solutions with ``v0 = 1`` of a normalized system in ``k`` variables.

    Returns ``(points, status, info)`` with status ``"ok"``, ``"incomplete"``
    or ``"positive"``.
    """
    tol = ctx.tol
    T = _normalize(T, tol.pivot)
    k = T.shape[1]
    if len(T) == 0:
        if k == 1:
            return [np.ones(1, dtype=complex)], "ok", {"k": k}
        return [], "positive", {"k": k, "reason": "no equations"}
    if k == 1:
        if np.max(np.abs(T[:, 0, 0])) <= tol.root:
            return [np.ones(1, dtype=complex)], "ok", {"k": k}
        return [], "ok", {"k": k}
    try:
        D0 = select_degree(k, len(T), ctx.d_max).D
    except DegreeOverflow:
        D0 = 2
    info = {"k": k, "N": len(T), "attempts": []}
    first_reducible = None
    result = None
    for D in range(D0, ctx.d_max + 1):
        sysx = expand_system(T, D, ctx.budget)
        el = eliminate(sysx, tol.pivot)
        poly = to_univariate(el, tol)
        att = {"D": D, "rank": el.rank, "block_ranks": list(el.block_ranks),
               "nullity": sysx.matrix.shape[1] - el.rank}
        info["attempts"].append(att)
        if poly is None:
            att["status"] = "not_reducible"
            continue
        if first_reducible is None:
            first_reducible = D
        last_try = D >= min(ctx.d_max, first_reducible + ctx.extra)
        roots = find_roots(poly, tol.proj) if len(poly) > 1 else []
        att["degree"] = len(poly) - 1
        att["roots"] = len(roots)
        back_ok = el.block_ranks[1] == k - 2
        if not back_ok and not last_try and roots:
            att["status"] = "back_substitution_deficient"
            continue
        pts, bad, positive = [], 0, False
        for t, mult in roots:
            if k == 2:
                cands = [np.array([1.0, t], dtype=complex)]
            elif back_ok:
                tau = t ** np.arange(D + 1)
                w = np.linalg.lstsq(el.back_rows, -(el.back_tail @ tau), rcond=None)[0]
                cands = [np.concatenate([[1.0, t], w])]
            else:
                sub_pts, st, _ = _solve_chart(_substitute(T, t), ctx, depth + 1)
                if st == "positive":
                    positive = True
                    break
                cands = [np.concatenate([[1.0, t], p[1:]]) for p in sub_pts]
                if not cands:
                    bad += 1
            for c in cands:
                c = polish(T, c)
                if abs(c[0]) > 0 and _residual(T, c) <= tol.root:
                    pts.append(c / c[0])
                else:
                    bad += 1
        if positive:
            att["status"] = "positive_fiber"
            return [], "positive", info
        att["status"] = "incomplete" if bad else "ok"
        att["unverified"] = bad
        result = (pts, "incomplete" if bad else "ok")
        if not bad or last_try:
            break
    info["D"] = info["attempts"][-1]["D"] if info["attempts"] else None
    if result is None:
        return [], "positive", info
    return result[0], result[1], info


def _solution_count(Tn, D, nullity, found, ctx):
    """Nullity of the expanded system once it is consistent with ``found``.

    Below the regularity degree the nullity can exceed the number of
    projective solutions, so it is recomputed at higher degrees until it
    drops to ``found`` or stops changing.  Returns ``None`` when the
    degree or size budget runs out first.
    """
    prev = nullity
    while prev > found:
        D += 1
        if D > ctx.d_max:
            return None
        try:
            sx = expand_system(Tn, D, ctx.budget)
        except SizeOverflow:
            return None
        s = _svd(sx.matrix, compute_uv=False)
        cur = sx.matrix.shape[1] - int(np.sum(s > ctx.tol.pivot * s[0]))
        if cur == prev:
            return cur
        prev = cur
    return prev


def solve(
    q,
    tol: Tolerances = DEFAULT_TOLERANCES,
    d_max: int = 10,
    memory_budget: int = 200_000_000,
    extra_degrees: int = 2,
) -> ProjectiveSolutionSet:
    """Projective solutions of ``u^T T_s u = 0`` for all ``s``.

    Raises
    ------
    DegreeOverflow
        No admissible XL degree for the full system.
    SizeOverflow
        An expanded system exceeds ``memory_budget`` entries.
    """
    q = q if isinstance(q, QuadraticSystem) else QuadraticSystem(q)
    Tn = q.normalized(tol.pivot)
    r = q.r
    diag = {"r": r, "N_eff": len(Tn), "charts": []}
    if len(Tn) == 0:
        if r == 1:
            return ProjectiveSolutionSet("finite", [np.ones(1, dtype=complex)], True, diag)
        diag["reason"] = "no nonzero equations"
        return ProjectiveSolutionSet("positive_dimensional", [], False, diag)
    if r >= 2:
        diag["xl_params"] = select_degree(r, len(Tn), d_max).to_dict()
    ctx = _Ctx(tol, d_max, memory_budget, extra_degrees, diag["charts"])
    raw = []
    complete = True
    for s in range(r):
        sub = Tn[:, s:, s:]
        pts, status, info = _solve_chart(sub, ctx)
        info["chart"] = s
        info["status"] = status
        diag["charts"].append(info)
        if status == "positive":
            diag["reason"] = f"positive-dimensional in chart {s}"
            return ProjectiveSolutionSet("positive_dimensional", [], False, diag)
        if status == "incomplete":
            complete = False
        for p in pts:
            u = np.zeros(r, dtype=complex)
            u[s:] = p
            raw.append(u)
    points = []
    residuals = []
    for u in raw:
        u = polish(Tn, u)
        res = _residual(Tn, u)
        if res > tol.root:
            complete = False
            continue
        if any(projective_distance(u, v) <= tol.proj for v in points):
            continue
        points.append(u)
        residuals.append(res)
    points = [projective_normalize(u, tol.proj) for u in points]
    diag["residuals"] = residuals
    # past the regularity degree the nullity of the full expanded system
    # counts the projective solutions with multiplicity; fewer verified
    # points means roots were lost (or are multiple), so do not claim
    # the list is exhaustive
    full = diag["charts"][0].get("attempts", []) if diag["charts"] else []
    if complete and full:
        expected = _solution_count(Tn, full[-1]["D"], full[-1]["nullity"], len(points), ctx)
        diag["expected_points"] = expected
        if expected is None or len(points) < expected:
            complete = False
            diag["reason"] = f"{len(points)} points found, expanded system nullity {expected}"
    D_used = [a["D"] for c in diag["charts"] for a in c.get("attempts", [])]
    diag["D_max_used"] = max(D_used) if D_used else None
    kind = "finite" if points else "empty"
    return ProjectiveSolutionSet(kind, points, complete, diag)
