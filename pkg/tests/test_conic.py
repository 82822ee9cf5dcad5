import importlib

import numpy as np
import pytest
from hypothesis import given, strategies as st

import conic_suite
from ucgna.conic import kernels_py
from ucgna.conic.external import solve_external
from ucgna.conic.solve import check_kkt, solve_conic
from ucgna.model import FREE_CONE, INFEASIBLE, OPTIMAL, UNBOUNDED, ConicProgram, soc


@pytest.mark.parametrize("build", conic_suite.INSTANCES, ids=lambda b: b.__name__)
def test_known_optimum(build):
    P, objective, duals = build()
    sol = solve_conic(P)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(objective, rel=1e-7, abs=1e-7)
    assert sol.gap <= 1e-6
    for tag, value in duals.items():
        assert sol.dual_of(tag) == pytest.approx(value, rel=1e-5, abs=1e-6), tag


def test_lp_kkt_residuals_small():
    P, _, _ = conic_suite.lp_vertex()
    sf = P.to_standard_form()
    res = check_kkt(sf, solve_conic(sf))
    assert res["primal"] < 1e-8
    assert res["dual_sign"] < 1e-8
    assert res["complementarity"] < 1e-7


def test_infeasible_pair_has_farkas_certificate():
    P = ConicProgram()
    x = P.add_block("x", 1, FREE_CONE)
    P.add_ge("lo", x[0], 1.0)
    P.add_ge("hi", -1.0 * x[0], 0.0)
    P.set_objective(x[0])
    sf = P.to_standard_form()
    sol = solve_conic(sf)
    assert sol.status == INFEASIBLE
    y = sol.certificate / np.abs(sol.certificate).max()
    assert np.all(y >= -1e-9)
    assert np.abs(sf.A.T @ y).max() < 1e-8
    assert float(sf.b @ y) > 0.5


def test_unbounded_reports_ray():
    P = ConicProgram()
    x = P.add_block("x", 1, FREE_CONE)
    P.add_ge("r", x[0], 0.0)
    P.set_objective(-1.0 * x[0])
    sol = solve_conic(P)
    assert sol.status == UNBOUNDED
    assert sol.certificate[0] > 0


def test_bound_overrides_do_not_touch_program():
    P, _, _ = conic_suite.lp_covering()
    sf = P.to_standard_form()
    lo, hi = sf.lower.copy(), sf.upper.copy()
    lo[0] = hi[0] = 0.75
    sol = solve_conic(sf, lower=lo, upper=hi)
    assert sol.x[0] == pytest.approx(0.75)
    assert sol.objective == pytest.approx(1.0, abs=1e-8)
    assert sf.lower[0] == 0.0


@given(st.lists(st.floats(0.5, 5.0), min_size=3, max_size=3),
       st.lists(st.floats(-2.0, 2.0), min_size=3, max_size=3),
       st.floats(0.5, 3.0))
def test_socp_matches_external_solver(costs, shift, budget):
    # min c'x + t  s.t. t >= ||x - shift||, sum(x) >= budget, x >= 0
    P = ConicProgram()
    x = P.add_block("x", 3)
    v = P.add_block("v", 4, soc(4))
    for i in range(3):
        P.add_eq(f"d{i}", v[i + 1] - x[i], -shift[i])
    P.add_ge("budget", x[0] + x[1] + x[2], budget)
    P.set_objective(sum(costs[i] * x[i] for i in range(3)) + v[0])
    sf = P.to_standard_form()
    ours, ref = solve_conic(sf), solve_external(sf)
    assert ours.status == ref.status == OPTIMAL
    assert ours.objective == pytest.approx(ref.objective, rel=1e-6, abs=1e-6)
    assert ours.dual_of("budget") == pytest.approx(ref.dual_of("budget"), rel=1e-4, abs=1e-5)


def _random_interior(rng, l, dims):
    parts = [rng.uniform(0.5, 2.0, l)]
    for d in dims:
        tail = rng.normal(size=d - 1)
        parts.append(np.concatenate(([np.linalg.norm(tail) + rng.uniform(0.1, 1.0)], tail)))
    return np.concatenate(parts)


def test_compiled_kernels_match_numpy():
    try:
        compiled = importlib.import_module("ucgna.conic._kernels")
    except ImportError:
        pytest.skip("compiled kernels not built")
    rng = np.random.default_rng(3)
    l, dims = 4, np.array([3, 3, 5], dtype=np.int64)
    starts = (l + np.concatenate(([0], np.cumsum(dims)[:-1]))).astype(np.int64)
    for _ in range(5):
        s, z = _random_interior(rng, l, dims), _random_interior(rng, l, dims)
        d = rng.normal(size=s.shape[0])
        a = kernels_py.nt_scaling(s, z, l, starts, dims)
        b = compiled.nt_scaling(s, z, l, starts, dims)
        for u, v in zip(a, b):
            np.testing.assert_allclose(u, v, rtol=1e-12, atol=1e-12)
        lp_w, wbar, eta, lam = a
        for inv in (False, True):
            np.testing.assert_allclose(kernels_py.scale(d, lp_w, wbar, eta, l, starts, dims, inv),
                                       compiled.scale(d, lp_w, wbar, eta, l, starts, dims, inv), rtol=1e-12)
        np.testing.assert_allclose(kernels_py.jordan_prod(s, d, l, starts, dims),
                                   compiled.jordan_prod(s, d, l, starts, dims), rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(kernels_py.jordan_div(lam, d, l, starts, dims),
                                   compiled.jordan_div(lam, d, l, starts, dims), rtol=1e-10, atol=1e-12)
        assert kernels_py.max_step(s, d, l, starts, dims) == pytest.approx(
            compiled.max_step(s, d, l, starts, dims), rel=1e-10)
        assert kernels_py.min_eig(s, l, starts, dims) == pytest.approx(compiled.min_eig(s, l, starts, dims))
        for u, v in zip(kernels_py.w2_blocks(lp_w, wbar, eta, l, starts, dims),
                        compiled.w2_blocks(lp_w, wbar, eta, l, starts, dims)):
            np.testing.assert_allclose(u, v, rtol=1e-12, atol=1e-12)


def test_scaling_maps_s_and_z_to_same_point():
    rng = np.random.default_rng(11)
    l, dims = 2, np.array([3, 4], dtype=np.int64)
    starts = (l + np.concatenate(([0], np.cumsum(dims)[:-1]))).astype(np.int64)
    s, z = _random_interior(rng, l, dims), _random_interior(rng, l, dims)
    lp_w, wbar, eta, lam = kernels_py.nt_scaling(s, z, l, starts, dims)
    np.testing.assert_allclose(kernels_py.scale(z, lp_w, wbar, eta, l, starts, dims, False), lam, rtol=1e-10)
    np.testing.assert_allclose(kernels_py.scale(s, lp_w, wbar, eta, l, starts, dims, True), lam, rtol=1e-10)


def test_jordan_division_inverts_product():
    rng = np.random.default_rng(5)
    l, dims = 3, np.array([3], dtype=np.int64)
    starts = np.array([l], dtype=np.int64)
    lam = _random_interior(rng, l, dims)
    x = rng.normal(size=lam.shape[0])
    d = kernels_py.jordan_prod(lam, x, l, starts, dims)
    np.testing.assert_allclose(kernels_py.jordan_div(lam, d, l, starts, dims), x, rtol=1e-9, atol=1e-12)


def test_max_step_reaches_boundary():
    rng = np.random.default_rng(9)
    l, dims = 2, np.array([3], dtype=np.int64)
    starts = np.array([l], dtype=np.int64)
    u = _random_interior(rng, l, dims)
    d = -u - rng.uniform(0.1, 1.0, size=u.shape[0])
    a = kernels_py.max_step(u, d, l, starts, dims)
    assert np.isfinite(a)
    assert kernels_py.min_eig(u + a * d, l, starts, dims) == pytest.approx(0.0, abs=1e-9)
    assert kernels_py.min_eig(u + 0.99 * a * d, l, starts, dims) > 0
