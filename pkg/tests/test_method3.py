import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from longpoisson.bench.reference import kronecker_operator, reference_solution_2d, solve_kronecker
from longpoisson.errors import DegenerateRHS, InvalidArgument
from longpoisson.expsum import ExpSumCache
from longpoisson.mesh import (assemble_laplacian_1d, assemble_laplacian_cs, build_cross_section,
                              interval_grid_for_spacing)
from longpoisson.method3 import (Method3Config, exponential_sum_for, method3_error_bound,
                                 method3_solve, method3_solve_many, spectral_interval)
from longpoisson.tensor import FullGridField, evaluate_full, rel_l2_error

CACHE = ExpSumCache()


def _tanh(gcs):
    return np.tanh(4 * gcs.coords[:, 0] + 1)


def _default_2d(ell):
    gcs = build_cross_section("interval", 2.0 / 256)
    return interval_grid_for_spacing(ell, 2.0 / 256), gcs


def test_table3_ell10_column():
    g1, gcs = _default_2d(10.0)
    f = _tanh(gcs)
    ref = reference_solution_2d(f, g1, gcs)
    errs = [rel_l2_error(method3_solve(f, g1, gcs, Method3Config(r=r, cache=CACHE)), ref)
            for r in range(1, 6)]
    target = [9.76e-2, 3.14e-2, 9.88e-3, 2.81e-3, 1.16e-3]
    np.testing.assert_allclose(errs, target, rtol=0.25)


def test_error_insensitive_to_length():
    errs = []
    for ell in (5.0, 20.0):
        g1, gcs = _default_2d(ell)
        f = _tanh(gcs)
        u = method3_solve(f, g1, gcs, Method3Config(r=3, cache=CACHE))
        errs.append(rel_l2_error(u, reference_solution_2d(f, g1, gcs)))
    assert max(errs) / min(errs) < 2.0


@pytest.mark.parametrize("cs_expm", ["sinc", "lanczos"])
def test_operator_error_bound(small_lshape, cs_expm):
    # ||A^-1 b - u_r||_2 <= eps_r ||b||_2 with identity mass matrices.
    g1, gcs, A1, Acs = small_lshape
    assert g1.n * gcs.n <= 400
    Ainv = np.linalg.inv(kronecker_operator(A1, Acs).toarray())
    rng = np.random.default_rng(5)
    for r in (2, 4, 6):
        cfg = Method3Config(r=r, cs_expm=cs_expm, quad_tol=1e-12, cache=CACHE)
        s = exponential_sum_for(A1, Acs, cfg)
        g = rng.standard_normal(gcs.n)
        b = np.kron(np.ones(g1.n), g)
        u = evaluate_full(method3_solve(g, g1, gcs, cfg, A1=A1, Acs=Acs)).values.ravel()
        assert np.linalg.norm(Ainv @ b - u) <= method3_error_bound(s) * np.linalg.norm(b) * 1.001


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1))
def test_bound_random_rhs(small_lshape, seed):
    g1, gcs, A1, Acs = small_lshape
    Ainv = np.linalg.inv(kronecker_operator(A1, Acs).toarray())
    cfg = Method3Config(r=3, cs_expm="lanczos", cache=CACHE)
    s = exponential_sum_for(A1, Acs, cfg)
    g = np.random.default_rng(seed).standard_normal(gcs.n)
    b = np.kron(np.ones(g1.n), g)
    u = evaluate_full(method3_solve(g, g1, gcs, cfg, A1=A1, Acs=Acs)).values.ravel()
    assert np.linalg.norm(Ainv @ b - u) <= s.eps * np.linalg.norm(b) * 1.001


def test_high_rank_matches_direct_solve():
    g1 = interval_grid_for_spacing(2.0, 1.0 / 16)
    gcs = build_cross_section("lshape", 1.0 / 16)
    f = np.tanh(gcs.coords[:, 0] * gcs.coords[:, 1])
    u = method3_solve(f, g1, gcs, Method3Config(r=30, cs_expm="lanczos", cache=CACHE))
    A1, Acs = assemble_laplacian_1d(g1), assemble_laplacian_cs(gcs)
    F = np.ascontiguousarray(np.broadcast_to(f, (g1.n, gcs.n)))
    ref = FullGridField(g1, gcs, solve_kronecker(F, A1, Acs, method="sparse"))
    assert rel_l2_error(u, ref) < 1e-8


def test_sinc_and_lanczos_agree(small_lshape):
    g1, gcs, A1, Acs = small_lshape
    f = np.tanh(gcs.coords[:, 0] * gcs.coords[:, 1])
    us = [evaluate_full(method3_solve(f, g1, gcs, Method3Config(r=5, cs_expm=m, cache=CACHE),
                                      A1=A1, Acs=Acs)).values for m in ("sinc", "lanczos")]
    np.testing.assert_allclose(us[0], us[1], atol=1e-9 * np.abs(us[1]).max())


def test_profiles_even(small_2d):
    g1, gcs, A1, Acs = small_2d
    u = method3_solve(_tanh(gcs), g1, gcs, Method3Config(r=4, cache=CACHE), A1=A1, Acs=Acs)
    assert u.rank == 4
    for t in u.terms:
        np.testing.assert_allclose(t.p, t.p[::-1], atol=1e-13 * np.abs(t.p).max())
        assert np.all(t.p > 0)


def test_solve_many_matches_single(small_lshape):
    g1, gcs, A1, Acs = small_lshape
    fs = [np.ones(gcs.n), gcs.coords[:, 1]]
    cfg = Method3Config(r=3, cache=CACHE)
    many = method3_solve_many(fs, g1, gcs, cfg, A1=A1, Acs=Acs)
    for f, u in zip(fs, many):
        single = method3_solve(f, g1, gcs, cfg, A1=A1, Acs=Acs)
        np.testing.assert_allclose(evaluate_full(u).values, evaluate_full(single).values,
                                   rtol=1e-12, atol=1e-14)


def test_spectral_interval_2d(small_2d):
    _, _, A1, Acs = small_2d
    a, b = spectral_interval(A1, Acs)
    ev = np.r_[A1.analytic_eigenvalues()[[0, -1]]] + Acs.analytic_eigenvalues()[[0, -1]]
    assert a == pytest.approx(ev[0], rel=1e-10) and b == pytest.approx(ev[1], rel=1e-10)


def test_rejects(small_2d):
    g1, gcs, A1, Acs = small_2d
    with pytest.raises(DegenerateRHS):
        method3_solve(np.zeros(gcs.n), g1, gcs, A1=A1, Acs=Acs)
    with pytest.raises(InvalidArgument):
        method3_solve(np.ones(gcs.n + 1), g1, gcs, A1=A1, Acs=Acs)
    for kw in (dict(r=0), dict(margin=1.0), dict(cs_expm="dense")):
        with pytest.raises(InvalidArgument):
            Method3Config(**kw)
