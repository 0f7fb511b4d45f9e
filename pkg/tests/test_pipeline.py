import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sepdecide.concurrence import build_biconcurrence, build_family, g0_form
from sepdecide.config import RunConfig
from sepdecide.oracles import (
    ENTANGLED,
    SEPARABLE,
    OracleVerdict,
    bell_state,
    gen_product_mixture,
    gen_random_state,
    ppt_test,
    werner_state,
)
from sepdecide.pipeline import Verdict, _enforce_consistency, decide, fallback_minimize_g0
from sepdecide.state import eigen_components, validate_state
from sepdecide.xl import QuadraticSystem, solve
from reference import brute_minors, proj_dist

DIAG = validate_state(np.diag([0.5, 0, 0, 0.5]), (2, 2))


def independent_check(cert, rho):
    """Recompute reconstruction and component concurrences without package code."""
    X = cert.components.coeffs.reshape(len(cert.components), -1)
    recon = X.T @ X.conj()
    conc = max(np.linalg.norm(brute_minors(a)) for a in cert.components.coeffs)
    return float(np.linalg.norm(recon - rho)), float(conc)


def test_bell_is_entangled():
    v = decide(bell_state())
    assert v.outcome == "entangled" and v.reason == "pure_entangled"
    assert v.witness == pytest.approx(1.0)
    assert v.oracle("ppt").outcome == ENTANGLED
    assert v.exit_code == 1


def test_diagonal_state_is_separable():
    v = decide(DIAG)
    assert v.outcome == "separable" and v.exit_code == 0
    comps = v.certificate.product_components
    assert len(comps) == 2
    err, conc = independent_check(v.certificate, DIAG.entries)
    assert err <= 1e-12 and conc <= 1e-12


def test_two_term_mixture_is_separable():
    s = gen_product_mixture((2, 2), 2, seed=17)
    v = decide(s)
    assert v.outcome == "separable"
    assert v.certificate.reconstruction_error <= 1e-8
    err, conc = independent_check(v.certificate, s.entries)
    assert err <= 1e-8 and conc <= 1e-7


def test_eigen_product_shortcut():
    # orthogonal product vectors make every concurrence matrix vanish
    s = validate_state(np.diag([0.7, 0.3, 0, 0]), (2, 2))
    v = decide(s)
    assert v.outcome == "separable" and v.reason == "eigen_product"


def test_fallback_examples():
    config = RunConfig()
    s = validate_state(np.diag([0.7, 0.3, 0, 0]), (2, 2))
    d = eigen_components(s)
    fb = fallback_minimize_g0(build_biconcurrence(build_family(d)), d, s.entries, config)
    assert fb.certificate is not None and fb.best_g0 == 0

    s = validate_state(np.eye(4) / 4, (2, 2))
    d = eigen_components(s)
    b = build_biconcurrence(build_family(d))
    fb = fallback_minimize_g0(b, d, s.entries, config)
    assert fb.certificate is not None
    assert g0_form(b, fb.certificate.isometry) <= 1e-14
    err, conc = independent_check(fb.certificate, s.entries)
    assert err <= 1e-9 and conc <= 1e-7

    s = bell_state()
    d = eigen_components(s)
    fb = fallback_minimize_g0(build_biconcurrence(build_family(d)), d, s.entries, config)
    assert fb.certificate is None
    # the infimum over two-row isometries is exactly 1/2
    assert fb.best_g0 >= 0.5 - 1e-12


def test_werner_routes():
    assert decide(werner_state(0.2)).outcome == "separable"
    v = decide(werner_state(0.6))
    assert v.outcome == "indeterminate" and v.reason == "positive_dimensional_variety"
    assert v.diagnostics["fallback"]["best_g0"] > 1e-3


def test_overflow_routes_to_fallback():
    s = gen_product_mixture((3, 3), 5, seed=1)
    v = decide(s, RunConfig(d_max=3))
    assert v.outcome in ("separable", "indeterminate")
    assert v.outcome == "separable" or v.reason == "degree_overflow"
    v = decide(gen_random_state((3, 3), 5, seed=2), RunConfig(memory_budget=1000))
    assert v.outcome != "entangled"
    assert v.outcome == "separable" or v.reason == "size_overflow"


def test_precheck_can_be_disabled():
    v = decide(werner_state(0.2), RunConfig(dimension_precheck=False))
    assert v.outcome == "separable"


def test_family_switch_agrees():
    for seed in range(10):
        s = gen_random_state((2, 3), 2 + seed % 2, seed=seed)
        assert decide(s).outcome == decide(s, RunConfig(family="C")).outcome


def test_T_and_C_solution_sets_match():
    for seed in range(20):
        dims, rank = [((2, 2), 2), ((2, 3), 2), ((2, 3), 3), ((3, 3), 4), ((3, 3), 5)][seed % 5]
        src = gen_product_mixture(dims, rank, seed=seed) if seed % 2 else gen_random_state(dims, rank, seed=seed)
        d = eigen_components(src)
        f = build_family(d)
        from sepdecide.concurrence import extract_T

        T = extract_T(build_biconcurrence(f))
        a = solve(QuadraticSystem(T.matrices))
        b = solve(QuadraticSystem(f.matrices))
        assert a.kind == b.kind
        assert len(a.points) == len(b.points)
        for p in a.points:
            assert min(proj_dist(p, q) for q in b.points) <= 1e-7


def test_report_shape():
    v = decide(gen_random_state((2, 2), 2, seed=4))
    out = v.to_dict(timings=False)
    assert set(out) == {"outcome", "reason", "witness", "certificate", "oracle_reports", "xl_params", "diagnostics"}
    assert set(out["xl_params"]) == {"r", "N_eff", "delta", "D", "n_eqs", "n_vars"}
    assert "timings_ms" in v.to_dict()
    assert all(t >= 0 for t in v.to_dict()["timings_ms"].values())


def test_determinism():
    for s in (gen_random_state((2, 3), 3, seed=3), werner_state(0.3), gen_product_mixture((3, 3), 4, seed=2)):
        assert decide(s).to_dict(timings=False) == decide(s).to_dict(timings=False)


def test_contradiction_downgrade():
    s = gen_random_state((2, 2), 2, seed=0)
    fake = Verdict("separable", "isometry_feasible")
    fake.oracle_reports = [OracleVerdict("ppt", ENTANGLED, -0.1)]
    out = _enforce_consistency(fake, s)
    assert out.outcome == "indeterminate" and out.reason == "certificate_check_failed"
    assert out.diagnostics["downgraded_from"]["outcome"] == "separable"
    fake = Verdict("entangled", "infeasible_weights")
    fake.oracle_reports = [OracleVerdict("ppt", SEPARABLE, 0.1)]
    assert _enforce_consistency(fake, s).outcome == "indeterminate"
    s33 = gen_random_state((3, 3), 4, seed=0)
    fake = Verdict("entangled", "infeasible_weights")
    fake.oracle_reports = [OracleVerdict("ppt", SEPARABLE, 0.1)]
    assert _enforce_consistency(fake, s33).outcome == "entangled"


small_dims = st.sampled_from([(2, 2), (2, 3), (3, 2)])


@settings(max_examples=100)
@given(seed=st.integers(0, 2**31 - 1), dims=small_dims, data=st.data())
def test_no_false_entanglement_small_dims(seed, dims, data):
    rank = data.draw(st.integers(1, dims[0] * dims[1]))
    kind = data.draw(st.sampled_from(["random", "product"]))
    s = gen_random_state(dims, rank, seed=seed) if kind == "random" else gen_product_mixture(dims, rank, seed=seed)
    v = decide(s, RunConfig(fallback_restarts=8, fallback_steps=500))
    if ppt_test(s).outcome == SEPARABLE:
        assert v.outcome != "entangled"
    if v.outcome == "separable":
        err, conc = independent_check(v.certificate, s.entries)
        assert err <= 1e-9 and conc <= 1e-7


@settings(max_examples=100)
@given(seed=st.integers(0, 2**31 - 1), dims=st.sampled_from([(2, 2), (2, 3), (3, 3)]), data=st.data())
def test_no_false_separability(seed, dims, data):
    rank = data.draw(st.integers(1, min(5, dims[0] * dims[1])))
    s = gen_random_state(dims, rank, seed=seed)
    v = decide(s, RunConfig(fallback_restarts=8, fallback_steps=500))
    if v.outcome == "separable":
        err, conc = independent_check(v.certificate, s.entries)
        assert err <= 1e-9 and conc <= 1e-7
    if ppt_test(s).outcome == ENTANGLED:
        assert v.outcome != "separable"
