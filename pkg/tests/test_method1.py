import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from longpoisson.bench.reference import reference_solution_2d
from longpoisson.errors import DegenerateRHS, InvalidArgument
from longpoisson.mesh import (assemble_laplacian_1d, assemble_laplacian_cs, build_cross_section,
                              build_interval_grid, interval_grid_for_spacing)
from longpoisson.method1 import (discrete_lambda1, error_bound_constants, interior_error_bound,
                                 method1_solution, psi_profile, solve_reduced)
from longpoisson.tensor import evaluate_full, h1_seminorm_error, rel_l2_error


def _interval(h):
    g = build_cross_section("interval", h)
    return g, g.coords[:, 0]


def test_reduced_constant_rhs_converges():
    # u = (1 - x^2)/2, alpha^2 = 4/15, beta^2 = 2/3, lambda = sqrt(5/2)
    lam_err = []
    for h in (2.0 / 64, 2.0 / 128):
        g, x = _interval(h)
        red = solve_reduced(np.ones(g.n), g)
        mid = g.n // 2
        assert red.u_inf[mid] == pytest.approx(0.5, abs=1e-12)  # FD is exact for quadratics
        assert red.beta_inf**2 == pytest.approx(float(np.sum(red.u_inf)) * h, rel=1e-10)
        lam_err.append(abs(red.lambda_inf - math.sqrt(2.5)))
    assert lam_err[0] < 1e-3 and 3.6 < lam_err[0] / lam_err[1] < 4.4


def test_reduced_eigenfunction_rhs():
    g, x = _interval(2.0 / 256)
    red = solve_reduced(np.cos(math.pi * x / 2), g)
    assert red.lambda_inf == pytest.approx(math.pi / 2, rel=1e-4)


def test_reduced_zero_rhs():
    g, _ = _interval(0.25)
    with pytest.raises(DegenerateRHS):
        solve_reduced(np.zeros(g.n), g)


@given(st.integers(0, 2**32 - 1))
def test_lambda_inf_above_lambda1(seed):
    g = build_cross_section("lshape", 0.125)
    Acs = assemble_laplacian_cs(g)
    f = np.random.default_rng(seed).standard_normal(g.n)
    red = solve_reduced(f, g, Acs)
    assert red.lambda_inf >= discrete_lambda1(Acs) - 1e-8


def test_psi_examples():
    g = build_interval_grid(20.0, 799)
    mid = psi_profile(2.0, g)[399]
    assert g.nodes[399] == pytest.approx(0.0, abs=1e-12)
    assert mid == pytest.approx(1.0 - 1.0 / math.cosh(40.0), abs=1e-15)
    g1 = build_interval_grid(1.0, 3)
    assert psi_profile(1.0, g1)[1] == pytest.approx(1.0 - 1.0 / math.cosh(1.0), rel=1e-14)
    assert 1.0 - 1.0 / math.cosh(1.0) == pytest.approx(0.3519457, abs=1e-7)
    # The end nodes tend to the zero boundary value.
    ends = [psi_profile(1.5, build_interval_grid(1.0, n))[0] for n in (99, 999)]
    assert ends[1] < ends[0] < 0.05
    with pytest.raises(InvalidArgument):
        psi_profile(0.0, g1)


def test_psi_no_overflow():
    psi = psi_profile(50.0, build_interval_grid(50.0, 4095))
    assert np.all(np.isfinite(psi))


@given(st.floats(1e-3, 100.0), st.floats(0.1, 60.0), st.integers(1, 500))
def test_psi_range(a, ell, n):
    psi = psi_profile(a, build_interval_grid(ell, n))
    # 1 - 1/cosh(a ell) rounds to 1 once cosh(a ell) exceeds 1/eps.
    assert np.all(psi >= 0) and np.all(psi <= 1)
    if a * ell < 15:
        assert np.all(psi < 1)
    np.testing.assert_allclose(psi, psi[::-1], atol=1e-13)


def test_psi_discrete_ode_is_second_order():
    a, ell = 1.7, 3.0
    res = []
    for n in (99, 199):
        g = build_interval_grid(ell, n)
        psi = psi_profile(a, g)
        res.append(np.max(np.abs(assemble_laplacian_1d(g).apply(psi) + a**2 * psi - a**2)))
    assert 3.6 < res[0] / res[1] < 4.4


def test_method1_symmetric(small_2d):
    g1, gcs, A1, Acs = small_2d
    u = evaluate_full(method1_solution(np.tanh(4 * gcs.coords[:, 0] + 1), g1, gcs, A1, Acs)).values
    np.testing.assert_allclose(u, u[::-1], atol=1e-13)


def test_method1_eigenvector_exact():
    gcs = build_cross_section("interval", 2.0 / 256)
    k = np.arange(1, gcs.n + 1)
    w = np.sin(math.pi * k / (gcs.n + 1))  # discrete first eigenvector of A'
    g1 = interval_grid_for_spacing(10.0, 2.0 / 256)
    err = rel_l2_error(method1_solution(w, g1, gcs), reference_solution_2d(w, g1, gcs))
    assert err <= 1e-6


def test_method1_table_value_ell10():
    gcs = build_cross_section("interval", 2.0 / 256)
    g1 = interval_grid_for_spacing(10.0, 2.0 / 256)
    f = np.ones(gcs.n)
    err = rel_l2_error(method1_solution(f, g1, gcs), reference_solution_2d(f, g1, gcs))
    assert err == pytest.approx(4.24e-3, rel=0.2)


def test_bound_constants():
    lam, ell = 1.2, 7.0
    c1, c2 = error_bound_constants(lam, ell, 0.0)
    assert c1 == 4.0
    assert c2 == pytest.approx(4 * (1 / lam + 6 * ell * math.exp(-2 * lam * ell)))
    c1, _ = error_bound_constants(math.pi / 2, 10.0, 5.0)
    assert c1 == pytest.approx(4 * math.exp(-5 * math.pi), rel=1e-14)
    assert c1 == pytest.approx(6.028e-7, rel=1e-3)
    with pytest.raises(InvalidArgument):
        error_bound_constants(1.0, 2.0, 2.0)


@given(st.floats(0.1, 5.0), st.floats(1.0, 50.0), st.floats(0.0, 0.98), st.floats(0.0, 0.98))
def test_bound_constants_decrease_in_delta(lam, ell, t1, t2):
    d1, d2 = sorted((t1 * ell, t2 * ell))
    if d2 - d1 < 1e-6 * ell:
        return
    a, b = error_bound_constants(lam, ell, d1), error_bound_constants(lam, ell, d2)
    assert b[0] < a[0] and b[1] < a[1]


@pytest.mark.parametrize("delta", [0.0, 1.0, 3.0])
def test_interior_bound_holds(delta):
    gcs = build_cross_section("interval", 2.0 / 64)
    g1 = interval_grid_for_spacing(5.0, 2.0 / 64)
    A1, Acs = assemble_laplacian_1d(g1), assemble_laplacian_cs(gcs)
    f = np.tanh(4 * gcs.coords[:, 0] + 1)
    red = solve_reduced(f, gcs, Acs)
    u = method1_solution(f, g1, gcs, A1, Acs)
    ref = reference_solution_2d(f, g1, gcs, A1=A1, Acs=Acs)
    window = None if delta == 0 else g1.ell - delta
    measured = h1_seminorm_error(u, ref, window)
    assert measured <= 1.1 * interior_error_bound(red, discrete_lambda1(Acs), g1.ell, delta)
