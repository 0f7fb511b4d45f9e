import itertools
import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sepdecide import _kernels
from sepdecide.config import Tolerances
from sepdecide.errors import DegreeOverflow, SizeOverflow, ZeroPolynomial
from sepdecide.xl import (
    QuadraticSystem,
    delta,
    eliminate,
    estimate_degree_heuristic,
    expand_system,
    find_roots,
    projective_distance,
    select_degree,
    solve,
    to_univariate,
)
from reference import grid_roots, planted_system, proj_dist, quadratic_residuals, random_system

SWAP = np.array([[0, 1], [1, 0]], dtype=complex)


def matches(found, expected, tol=1e-6):
    return all(any(proj_dist(e, f) <= tol for f in found) for e in expected)


def test_delta_examples():
    assert delta(9, 9) == 1
    assert delta(8, 9) == 2
    assert delta(2, 1) == 0


def test_select_degree_examples():
    p = select_degree(8, 9)
    assert (p.D, p.n_eqs, p.n_vars) == (5, 1080, 792)
    p = select_degree(9, 9)
    from math import comb
    assert comb(9 + p.D - 1, p.D) - p.D <= 9 * comb(9 + p.D - 3, p.D - 2)
    for D in range(2, p.D):
        assert comb(9 + D - 1, D) - D > 9 * comb(9 + D - 3, D - 2)
    assert select_degree(2, 1).D == 2
    with pytest.raises(DegreeOverflow):
        select_degree(30, 1, d_max=10)


def test_heuristic_examples():
    assert estimate_degree_heuristic(9, 9) == 9
    assert estimate_degree_heuristic(4, 3) == 8
    assert estimate_degree_heuristic(9, 10) == 3


def test_expand_small_examples():
    sx = expand_system(QuadraticSystem(SWAP), 2)
    assert sx.matrix.shape == (1, 3)
    row = dict(zip(sx.monomials, sx.matrix[0]))
    assert row == {(0, 0): 0, (0, 1): 2, (1, 1): 0}
    sx = expand_system(QuadraticSystem(SWAP), 3)
    assert sx.matrix.shape == (2, 4)
    rows = {sx.multipliers[i]: dict(zip(sx.monomials, sx.matrix[i])) for i in range(2)}
    assert rows[(0,)][(0, 0, 1)] == 2 and sum(abs(v) for v in rows[(0,)].values()) == 2
    assert rows[(1,)][(0, 1, 1)] == 2 and sum(abs(v) for v in rows[(1,)].values()) == 2


def test_expand_pointwise(rng):
    T = random_system(3, 2, rng)
    sx = expand_system(QuadraticSystem(T), 3)
    u = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    mono = np.array([np.prod(u[list(m)]) for m in sx.monomials])
    lhs = sx.matrix @ mono
    rhs = [quadratic_residuals(T, u)[s] * np.prod(u[list(p)]) for s in range(2) for p in sx.multipliers]
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * np.max(np.abs(rhs)))
    from math import comb
    assert sx.matrix.shape == (2 * comb(3 + 3 - 3, 1), comb(3 + 3 - 1, 3))


def test_size_overflow(rng):
    with pytest.raises(SizeOverflow):
        expand_system(QuadraticSystem(random_system(4, 3, rng)), 4, memory_budget=100)


def test_eliminate_examples(rng):
    el = eliminate(expand_system(QuadraticSystem(SWAP), 2))
    assert el.rank == 1
    poly = to_univariate(el)
    np.testing.assert_allclose(np.abs(poly), [0, 1], atol=1e-15)

    sx = expand_system(QuadraticSystem(random_system(3, 6, rng)), 2)
    assert sx.matrix.shape == (6, 6)
    el = eliminate(sx)
    assert el.rank == np.linalg.matrix_rank(sx.matrix) == 6

    T = random_system(3, 2, rng)
    r1 = eliminate(expand_system(QuadraticSystem(T), 3)).rank
    r2 = eliminate(expand_system(QuadraticSystem(np.concatenate([T, T])), 3)).rank
    assert r1 == r2


def test_eliminate_methods_agree(rng):
    for _ in range(5):
        T = random_system(3, 2, rng)
        sx = expand_system(QuadraticSystem(T), 4)
        a = eliminate(sx, method="orthogonal")
        b = eliminate(sx, method="gauss")
        assert a.block_ranks == b.block_ranks
        ra = np.sort(np.roots(to_univariate(a)[::-1]))
        rb = np.sort(np.roots(to_univariate(b)[::-1]))
        np.testing.assert_allclose(ra, rb, atol=1e-6)


def test_univariate_sum_of_squares():
    el = eliminate(expand_system(QuadraticSystem(np.eye(2)), 2))
    p = to_univariate(el)
    p = p / p[0]
    np.testing.assert_allclose(p, [1, 0, 1], atol=1e-14)


def test_univariate_quadratic_formula(rng):
    for _ in range(10):
        T = random_system(2, 1, rng)[0]
        a, b, c = T[0, 0], 2 * T[0, 1], T[1, 1]
        disc = np.sqrt(b * b - 4 * a * c)
        expected = np.sort_complex(np.array([(-b + disc) / (2 * c), (-b - disc) / (2 * c)]))
        roots = np.sort_complex(np.array([z for z, _ in find_roots(to_univariate(eliminate(expand_system(QuadraticSystem(T), 2))))]))
        np.testing.assert_allclose(roots, expected, rtol=1e-9)


def test_find_roots_examples(rng):
    roots = sorted(find_roots([1, 0, 1]), key=lambda z: z[0].imag)
    assert roots[0][0] == pytest.approx(-1j) and roots[1][0] == pytest.approx(1j)
    (z, mult), = find_roots([0, 0, 0, 1])
    assert abs(z) < 1e-12 and mult == 3
    known = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    coeffs = np.poly(known)[::-1]
    got = np.array([z for z, _ in find_roots(coeffs)])
    assert all(np.min(np.abs(got - k)) <= 1e-8 for k in known)
    with pytest.raises(ZeroPolynomial):
        find_roots([0, 0])


def test_solve_examples():
    sol = solve(QuadraticSystem(SWAP))
    assert sol.kind == "finite" and sol.complete
    assert matches(sol.points, [np.array([1, 0]), np.array([0, 1])]) and len(sol.points) == 2
    sol = solve(QuadraticSystem(np.eye(2)))
    assert matches(sol.points, [np.array([1, 1j]), np.array([1, -1j])]) and len(sol.points) == 2
    for p in sol.points:
        assert p[0] == 1
    sol = solve(QuadraticSystem(np.array([[[1, 0], [0, 0]], [[0, 0], [0, 1]]], dtype=complex)))
    assert sol.kind == "empty" and sol.complete


def test_positive_dimensional():
    # u0 u1 = u0 u2 = 0 contains the whole line u0 = 0
    T = np.zeros((2, 3, 3), dtype=complex)
    T[0, 0, 1] = T[0, 1, 0] = 1
    T[1, 0, 2] = T[1, 2, 0] = 1
    sol = solve(QuadraticSystem(T), d_max=6)
    assert sol.kind == "positive_dimensional"
    with pytest.raises(DegreeOverflow):
        solve(QuadraticSystem(T[:1]), d_max=6)


@pytest.mark.parametrize("r,N", [(2, 1), (3, 2), (3, 3), (4, 3), (4, 4)])
def test_soundness_and_bezout(r, N):
    rng = np.random.default_rng(100 * r + N)
    for _ in range(10):
        T = random_system(r, N, rng)
        sol = solve(QuadraticSystem(T))
        assert sol.complete
        assert len(sol.points) <= 2 ** min(N, r - 1)
        Tn = T / np.linalg.norm(T, axis=(1, 2))[:, None, None]
        for p in sol.points:
            u = p / np.linalg.norm(p)
            assert np.max(np.abs(quadratic_residuals(Tn, u))) <= 1e-7
        if N == r - 1:
            assert len(sol.points) == 2 ** N


def test_chart_completeness_against_grid_oracle():
    rng = np.random.default_rng(2024)
    instances = 0
    for trial in range(60):
        r = 2 if trial % 3 == 0 else 3
        if trial % 2:
            T = random_system(r, r - 1, rng)
        else:
            # plant solutions, some on the chart u0 = 0
            npts = 2 if r == 2 else 4
            pts = [rng.standard_normal(r) + 1j * rng.standard_normal(r) for _ in range(npts)]
            pts[0][0] = 0
            T = planted_system(pts, r - 1, rng)
        oracle = grid_roots(T, radii=(0.2, 1.0, 5.0), phases=6)
        sol = solve(QuadraticSystem(T))
        assert sol.complete
        missed = [u for u in oracle if not any(proj_dist(u, p) <= 1e-6 for p in sol.points)]
        assert not missed, f"trial {trial}: {len(missed)} roots missed"
        instances += 1
    assert instances >= 50


def test_planted_points_recovered(rng):
    for _ in range(10):
        pts = [rng.standard_normal(3) + 1j * rng.standard_normal(3) for _ in range(4)]
        pts[1][:2] = 0
        T = planted_system(pts, 2, rng)
        sol = solve(QuadraticSystem(T))
        assert len(sol.points) == 4
        assert matches(sol.points, pts)


@given(seed=st.integers(0, 2**31 - 1), r=st.sampled_from([2, 3, 4]))
def test_scale_invariance(seed, r):
    rng = np.random.default_rng(seed)
    T = random_system(r, r - 1, rng)
    c = rng.standard_normal(r - 1) + 1j * rng.standard_normal(r - 1)
    a = solve(QuadraticSystem(T))
    b = solve(QuadraticSystem(T * c[:, None, None]))
    assert len(a.points) == len(b.points)
    assert matches(a.points, b.points, 1e-6)


def test_determinism(rng):
    T = random_system(4, 3, rng)
    a = solve(QuadraticSystem(T))
    b = solve(QuadraticSystem(T))
    assert len(a.points) == len(b.points)
    for p, q in zip(a.points, b.points):
        assert np.array_equal(p, q)


def test_backends_agree(rng):
    T = random_system(4, 3, rng)
    sx = expand_system(QuadraticSystem(T), 4)
    old = _kernels.get_backend()
    try:
        res = {}
        for name in ("numpy", "numba") if _kernels.HAVE_NUMBA else ("numpy",):
            _kernels.set_backend(name)
            res[name] = (expand_system(QuadraticSystem(T), 4).matrix, eliminate(sx, method="gauss").block_ranks,
                         solve(QuadraticSystem(T)).points)
    finally:
        _kernels.set_backend(old)
    if len(res) == 2:
        np.testing.assert_array_equal(res["numpy"][0], res["numba"][0])
        assert res["numpy"][1] == res["numba"][1]
        assert len(res["numpy"][2]) == len(res["numba"][2])
        assert matches(res["numpy"][2], res["numba"][2], 1e-6)


def test_diagnostics_report(rng):
    sol = solve(QuadraticSystem(random_system(3, 2, rng)))
    d = sol.diagnostics
    assert d["xl_params"]["D"] == select_degree(3, 2).D
    assert d["D_max_used"] >= d["xl_params"]["D"]
    assert len(d["charts"]) == 3
    assert all("attempts" in c for c in d["charts"][:2])
    assert len(d["residuals"]) == len(sol.points)
