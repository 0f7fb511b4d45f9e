"""End-to-end separability decision.

eigen-ensemble -> concurrence matrices -> biconcurrence -> eigen-matrices
-> XL solve -> nonnegative weights, with a best-effort descent on the
quartic form when the solution variety is not finite.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .concurrence import (
    Biconcurrence,
    build_biconcurrence,
    build_family,
    count_indices,
    extract_T,
    g0_form,
)
from .config import RunConfig
from .errors import CertificateCheckFailed, DegreeOverflow, SizeOverflow
from .feasibility import (
    SeparableCertificate,
    build_gram_constraints,
    certificate_from_isometry,
    solve_nonnegative,
)
from .oracles import ENTANGLED, SEPARABLE, OracleVerdict, ppt_exact, ppt_test, pure_separability, realignment_test
from .state import DensityMatrix, Decomposition, eigen_components
from .xl import QuadraticSystem, solve

log = logging.getLogger(__name__)

SEPARABLE_OUT = "separable"
ENTANGLED_OUT = "entangled"
INDETERMINATE_OUT = "indeterminate"


@dataclass
class Verdict:
    outcome: str
    reason: str
    witness: float | None = None
    certificate: SeparableCertificate | None = None
    oracle_reports: list = field(default_factory=list)
    xl_params: dict | None = None
    diagnostics: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return {SEPARABLE_OUT: 0, ENTANGLED_OUT: 1, INDETERMINATE_OUT: 2}[self.outcome]

    def oracle(self, name: str) -> OracleVerdict | None:
        for o in self.oracle_reports:
            if o.name == name:
                return o
        return None

    def to_dict(self, timings: bool = True) -> dict:
        out = {
            "outcome": self.outcome,
            "reason": self.reason,
            "witness": None if self.witness is None else float(self.witness),
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "oracle_reports": [o.to_dict() for o in self.oracle_reports],
            "xl_params": self.xl_params,
            "diagnostics": self.diagnostics,
        }
        if timings:
            out["timings_ms"] = {k: 1000.0 * v for k, v in self.timings.items()}
        return out


@dataclass
class FallbackResult:
    certificate: SeparableCertificate | None
    best_g0: float
    restarts: int
    ks: list


def fallback_minimize_g0(
    b: Biconcurrence,
    d: Decomposition,
    rho: np.ndarray,
    config: RunConfig = RunConfig(),
) -> FallbackResult:
    """Seeded multi-start descent of the quartic form over ``K x r`` isometries.

    Ensemble sizes ``K`` run from ``r`` to ``min(2 r, K_max)``, cycled over
    the restarts.  Only ever produces a certificate or nothing.
    """
    tol = config.tol
    r = b.r
    T = extract_T(b, r, tol.rank).matrices
    if len(T) == 0:
        cert = certificate_from_isometry(np.eye(r, dtype=complex), d, rho, tol)
        return FallbackResult(cert, 0.0, 0, [r])
    k_max = config.k_max or d.dims.total ** 2
    ks = list(range(r, max(r, min(2 * r, k_max)) + 1))
    rng = np.random.default_rng(config.seed)
    target = tol.sep ** 2
    best = np.inf
    for i in range(config.fallback_restarts):
        K = ks[i % len(ks)]
        U0 = rng.standard_normal((K, r)) + 1j * rng.standard_normal((K, r))
        U, f, _ = _kernels.descend(U0, T, config.fallback_steps, 1e-2 * target)
        best = min(best, f)
        if f <= target:
            try:
                cert = certificate_from_isometry(U, d, rho, tol)
            except CertificateCheckFailed as exc:
                log.debug("fallback candidate rejected: %s", exc)
                continue
            return FallbackResult(cert, float(f), i + 1, ks)
    return FallbackResult(None, float(best), config.fallback_restarts, ks)


def _zero_dimensional_possible(dims, r: int) -> bool:
    # range of dimension r meets the product variety (codimension
    # (m-1)(n-1)) in a set of dimension >= r - 1 - (m-1)(n-1)
    return r - 1 <= (dims.m - 1) * (dims.n - 1)


def decide(state: DensityMatrix, config: RunConfig = RunConfig()) -> Verdict:
    tol = config.tol
    timings: dict = {}
    clock = time.perf_counter()

    def lap(name):
        nonlocal clock
        now = time.perf_counter()
        timings[name] = now - clock
        clock = now

    oracles = [ppt_test(state, tol), realignment_test(state, tol)]
    lap("oracles")
    verdict = _decide_core(state, config, timings, lap)
    verdict.oracle_reports = oracles
    verdict.timings = timings
    return _enforce_consistency(verdict, state)


def _decide_core(state, config, timings, lap) -> Verdict:
    tol = config.tol
    rho = state.entries
    dims = state.dims
    d = eigen_components(state)
    r = len(d)
    diag = {"rank": r, "dims": list(dims.as_tuple()), "N": count_indices(dims), "family": config.family}

    if r == 1:
        pv = pure_separability(state, tol)
        lap("pure")
        if pv.outcome == SEPARABLE:
            cert = certificate_from_isometry(np.eye(1, dtype=complex), d, rho, tol)
            return Verdict(SEPARABLE_OUT, "pure_product", pv.witness_value, cert, diagnostics=diag)
        return Verdict(ENTANGLED_OUT, "pure_entangled", pv.witness_value, diagnostics=diag)

    fam = build_family(d)
    B = build_biconcurrence(fam)
    Tfam = extract_T(B, r, tol.rank)
    lap("concurrence")
    diag["N_T"] = len(Tfam)
    if len(Tfam) == 0:
        try:
            cert = certificate_from_isometry(np.eye(r, dtype=complex), d, rho, tol)
        except CertificateCheckFailed as exc:
            diag["certificate_error"] = str(exc)
            return Verdict(INDETERMINATE_OUT, "certificate_check_failed", diagnostics=diag)
        return Verdict(SEPARABLE_OUT, "eigen_product", 0.0, cert, diagnostics=diag)

    system = QuadraticSystem(Tfam.matrices if config.family == "T" else fam.matrices)
    xl_params = None
    reason = None
    if config.dimension_precheck and not _zero_dimensional_possible(dims, r):
        reason = "positive_dimensional_variety"
        diag["xl"] = {"skipped": "range dimension forces a positive-dimensional variety"}
    else:
        try:
            sol = solve(system, tol, config.d_max, config.memory_budget)
        except DegreeOverflow as exc:
            reason = "degree_overflow"
            diag["xl"] = {"error": str(exc)}
        except SizeOverflow as exc:
            reason = "size_overflow"
            diag["xl"] = {"error": str(exc)}
        else:
            xl_params = sol.diagnostics.get("xl_params")
            diag["xl"] = _xl_summary(sol)
            lap("xl")
            if sol.kind == "empty" and sol.complete:
                return Verdict(ENTANGLED_OUT, "empty_variety", float(np.sqrt(r)),
                               xl_params=xl_params, diagnostics=diag)
            if sol.kind == "finite":
                verdict = _feasibility(sol, d, rho, config, xl_params, diag, lap)
                if verdict.reason != "incomplete_solution_set":
                    return verdict
            reason = "positive_dimensional_variety" if sol.kind == "positive_dimensional" else "incomplete_solution_set"
    if "xl" not in timings:
        lap("xl")
    fb = fallback_minimize_g0(B, d, rho, config)
    lap("fallback")
    diag["fallback"] = {"best_g0": fb.best_g0, "restarts": fb.restarts, "ks": fb.ks}
    if fb.certificate is not None:
        return Verdict(SEPARABLE_OUT, "g0_descent", fb.best_g0, fb.certificate,
                       xl_params=xl_params, diagnostics=diag)
    return Verdict(INDETERMINATE_OUT, reason, fb.best_g0, xl_params=xl_params, diagnostics=diag)


def _xl_summary(sol) -> dict:
    dg = sol.diagnostics
    return {
        "kind": sol.kind,
        "complete": sol.complete,
        "points": len(sol.points),
        "D_max_used": dg.get("D_max_used"),
        "max_residual": max(dg.get("residuals", []), default=0.0),
        "charts": [
            {
                "chart": c["chart"],
                "status": c["status"],
                "attempts": [
                    {k: a[k] for k in ("D", "rank", "block_ranks", "status") if k in a}
                    for a in c.get("attempts", [])
                ],
            }
            for c in dg.get("charts", [])
        ],
    }


def _feasibility(sol, d, rho, config, xl_params, diag, lap) -> Verdict:
    tol = config.tol
    rows = np.array([u / np.linalg.norm(u) for u in sol.points])
    k_max = config.k_max or d.dims.total ** 2
    diag["candidates"] = len(rows)
    diag["candidates_over_k_max"] = bool(len(rows) > k_max)
    w = solve_nonnegative(build_gram_constraints(rows), tol.feas)
    lap("feasibility")
    diag["weights_residual"] = w.residual
    if w.feasible:
        keep = w.weights > tol.weight
        V = np.sqrt(w.weights[keep])[:, None] * rows[keep]
        try:
            cert = certificate_from_isometry(V, d, rho, tol, rows=rows[keep], weights=w.weights[keep])
        except CertificateCheckFailed as exc:
            diag["certificate_error"] = str(exc)
            return Verdict(INDETERMINATE_OUT, "certificate_check_failed", xl_params=xl_params, diagnostics=diag)
        return Verdict(SEPARABLE_OUT, "isometry_feasible", w.residual, cert, xl_params=xl_params, diagnostics=diag)
    if sol.complete:
        return Verdict(ENTANGLED_OUT, "infeasible_weights", w.residual, xl_params=xl_params, diagnostics=diag)
    return Verdict(INDETERMINATE_OUT, "incomplete_solution_set", w.residual, xl_params=xl_params, diagnostics=diag)


def _enforce_consistency(v: Verdict, state: DensityMatrix) -> Verdict:
    ppt = v.oracle("ppt")
    conflict = None
    if v.outcome == SEPARABLE_OUT and any(o.outcome == ENTANGLED for o in v.oracle_reports):
        conflict = "separable verdict against an entanglement certificate"
    if v.outcome == ENTANGLED_OUT and ppt is not None and ppt.outcome == SEPARABLE and ppt_exact(state.dims):
        conflict = "entangled verdict against an exact ppt separability certificate"
    if conflict:
        log.warning("downgrading %s verdict: %s", v.outcome, conflict)
        v.diagnostics["downgraded_from"] = {"outcome": v.outcome, "reason": v.reason, "conflict": conflict}
        v.outcome = INDETERMINATE_OUT
        v.reason = "certificate_check_failed"
        v.certificate = None
    return v


__all__ = ["Verdict", "decide", "fallback_minimize_g0", "g0_form"]
