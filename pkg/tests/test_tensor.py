import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from longpoisson.errors import DegenerateReference, InvalidArgument
from longpoisson.mesh import build_cross_section, build_interval_grid
from longpoisson.tensor import (FullGridField, RankOneTerm, TensorField, evaluate_full, h1_seminorm,
                                h1_seminorm_error, l2_inner_1d, l2_inner_cs, l2_norm, read_field_csv,
                                rel_l2_error, write_field_csv)

seeds = st.integers(0, 2**32 - 1)


def _random_field(g1, gcs, rank, seed):
    rng = np.random.default_rng(seed)
    return TensorField(g1, gcs, tuple(RankOneTerm.build(rng.standard_normal(g1.n),
                                                        rng.standard_normal(gcs.n))
                                      for _ in range(rank)))


def test_evaluate_full_basics(small_2d):
    g1, gcs, _, _ = small_2d
    assert np.all(evaluate_full(TensorField(g1, gcs, ())).values == 0)
    one = RankOneTerm.build(np.ones(g1.n), np.ones(gcs.n))
    assert np.all(evaluate_full(TensorField(g1, gcs, (one,))).values == 1)
    rng = np.random.default_rng(0)
    p, q = rng.standard_normal(g1.n), rng.standard_normal(gcs.n)
    pair = TensorField(g1, gcs, (RankOneTerm.build(p, q), RankOneTerm.build(-p, q)))
    np.testing.assert_allclose(evaluate_full(pair).values, 0.0, atol=1e-15)


def test_term_caches(small_2d):
    g1, gcs, A1, Acs = small_2d
    rng = np.random.default_rng(3)
    t = RankOneTerm.build(rng.standard_normal(g1.n), rng.standard_normal(gcs.n), A1, Acs)
    np.testing.assert_allclose(t.Ap, A1.dense() @ t.p, rtol=1e-12)
    np.testing.assert_allclose(t.Aq, Acs.dense() @ t.q, rtol=1e-12)
    s = t.scaled(-2.5)
    np.testing.assert_allclose(s.Ap, A1.apply(s.p), rtol=1e-12)


def test_mismatched_term_rejected(small_2d):
    g1, gcs, _, _ = small_2d
    with pytest.raises(InvalidArgument):
        TensorField(g1, gcs, (RankOneTerm.build(np.ones(g1.n + 1), np.ones(gcs.n)),))


@given(seeds, st.integers(0, 4), st.integers(0, 4))
def test_evaluate_full_linear(small_2d, seed, r1, r2):
    g1, gcs, _, _ = small_2d
    a = _random_field(g1, gcs, r1, seed)
    b = _random_field(g1, gcs, r2, seed + 1)
    lhs = evaluate_full(a.concat(b)).values
    rhs = evaluate_full(a).values + evaluate_full(b).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-13 * max(1.0, np.abs(rhs).max()))


def test_inner_1d_examples():
    g = build_interval_grid(1.0, 3)
    assert l2_inner_1d(np.ones(3), np.ones(3), g) == pytest.approx(1.5)
    n = 31
    gi = build_interval_grid(1.0, n)
    i = np.arange(1, n + 1)
    s1, s2 = np.sin(math.pi * i / (n + 1)), np.sin(2 * math.pi * i / (n + 1))
    assert abs(l2_inner_1d(s1, s2, gi)) < 1e-12
    with pytest.raises(InvalidArgument):
        l2_inner_1d(np.ones(3), np.ones(4), g)


def test_inner_1d_psi_antiderivative():
    # int_{-ell}^{ell} 1 - cosh(a x)/cosh(a ell) dx = 2 ell - 2 tanh(a ell)/a
    a, ell = 1.3, 2.0
    errs = []
    for n in (199, 399):
        g = build_interval_grid(ell, n)
        psi = 1 - np.cosh(a * g.nodes) / np.cosh(a * ell)
        errs.append(abs(l2_inner_1d(psi, np.ones(n), g) - (2 * ell - 2 * math.tanh(a * ell) / a)))
    assert errs[0] < 1e-3
    assert 3.6 < errs[0] / errs[1] < 4.4


def test_inner_cs_examples():
    gi = build_cross_section("interval", 0.5)
    assert l2_inner_cs(np.ones(3), np.ones(3), gi) == pytest.approx(1.5)
    gl = build_cross_section("lshape", 0.5)
    assert l2_inner_cs(np.ones(gl.n), np.ones(gl.n), gl) == pytest.approx(1.25)
    errs = []
    for h in (2.0 / 64, 2.0 / 128):
        g = build_cross_section("interval", h)
        x = g.coords[:, 0]
        errs.append(abs(l2_inner_cs(np.ones(g.n), (1 - x**2) / 2, g) - 2.0 / 3.0))
    assert errs[0] < 1e-3 and 3.6 < errs[0] / errs[1] < 4.4


@given(seeds)
def test_inner_products_symmetric_bilinear_positive(seed):
    rng = np.random.default_rng(seed)
    g = build_cross_section("lshape", 0.25)
    u, v, w = rng.standard_normal((3, g.n))
    c = rng.uniform(-3, 3)
    assert l2_inner_cs(u, v, g) == pytest.approx(l2_inner_cs(v, u, g), rel=1e-13, abs=1e-13)
    assert l2_inner_cs(c * u + w, v, g) == pytest.approx(
        c * l2_inner_cs(u, v, g) + l2_inner_cs(w, v, g), rel=1e-12, abs=1e-12)
    assert l2_inner_cs(u, u, g) > 0


def test_rel_error_examples(small_2d):
    g1, gcs, _, _ = small_2d
    ref = _random_field(g1, gcs, 2, 7)
    full = evaluate_full(ref)
    assert rel_l2_error(ref, full) == pytest.approx(0.0, abs=1e-15)
    zero = FullGridField(g1, gcs, np.zeros((g1.n, gcs.n)))
    assert rel_l2_error(zero, full) == pytest.approx(1.0)
    other = _random_field(g1, gcs, 1, 8)
    assert rel_l2_error(other, full, window=g1.ell) == pytest.approx(rel_l2_error(other, full))
    with pytest.raises(DegenerateReference):
        rel_l2_error(full, zero)
    with pytest.raises(InvalidArgument):
        rel_l2_error(other, full, window=2 * g1.ell)


@given(seeds, st.floats(0.1, 10.0), st.booleans())
def test_rel_error_scale_invariant(small_2d, seed, c, neg):
    g1, gcs, _, _ = small_2d
    c = -c if neg else c
    a, b = _random_field(g1, gcs, 2, seed), _random_field(g1, gcs, 3, seed + 1)
    fa, fb = evaluate_full(a), evaluate_full(b)
    scaled = rel_l2_error(FullGridField(g1, gcs, c * fa.values), FullGridField(g1, gcs, c * fb.values))
    assert scaled == pytest.approx(rel_l2_error(fa, fb), rel=1e-13)


def test_lowrank_and_full_norms_agree(small_lshape):
    g1, gcs, _, _ = small_lshape
    u = _random_field(g1, gcs, 3, 11)
    full = evaluate_full(u)
    assert l2_norm(u) == pytest.approx(l2_norm(full), rel=1e-12)
    assert l2_norm(u, 0.5) == pytest.approx(l2_norm(full, 0.5), rel=1e-12)
    assert h1_seminorm(u) == pytest.approx(h1_seminorm(full), rel=1e-12)
    assert h1_seminorm(u, 0.5) == pytest.approx(h1_seminorm(full, 0.5), rel=1e-12)


@pytest.mark.parametrize("fixture", ["small_2d", "small_lshape"])
def test_h1_matches_energy(fixture, request):
    # Summation by parts: ||grad u||^2 = weight * u^T (A1 (x) I + I (x) A') u.
    g1, gcs, A1, Acs = request.getfixturevalue(fixture)
    U = evaluate_full(_random_field(g1, gcs, 2, 5)).values
    energy = g1.h * gcs.weight * float(np.sum(U * (A1.dense() @ U + U @ Acs.dense())))
    assert h1_seminorm(FullGridField(g1, gcs, U)) ** 2 == pytest.approx(energy, rel=1e-12)


def test_h1_sine_mode():
    # u = sin(pi (x1+ell)/(2 ell)) sin(pi (x'+1)/2): ||grad u||^2 -> (pi^2/4)(1/ell^2 + 1) ell
    ell = 2.0
    errs = []
    for n in (63, 127):
        g1 = build_interval_grid(ell, n)
        gcs = build_cross_section("interval", 2.0 / (n + 1))
        p = np.sin(math.pi * (g1.nodes + ell) / (2 * ell))
        q = np.sin(math.pi * (gcs.coords[:, 0] + 1) / 2)
        u = TensorField(g1, gcs, (RankOneTerm.build(p, q),))
        exact = math.sqrt(math.pi**2 / 4 * (1 / ell**2 + 1) * ell)
        errs.append(abs(h1_seminorm(u) - exact))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


@given(seeds)
def test_h1_error_triangle(seed):
    g1 = build_interval_grid(1.0, 9)
    gcs = build_cross_section("lshape", 0.25)
    a, b, c = (_random_field(g1, gcs, 2, seed + k) for k in range(3))
    assert h1_seminorm_error(a, a) <= 1e-12 * h1_seminorm(a)
    assert h1_seminorm_error(a, c) <= h1_seminorm_error(a, b) + h1_seminorm_error(b, c) + 1e-12


def test_field_csv_roundtrip(tmp_path, small_lshape):
    g1, gcs, _, _ = small_lshape
    u = _random_field(g1, gcs, 2, 9)
    path = tmp_path / "u.csv"
    write_field_csv(u, path)
    header = path.read_text().splitlines()[0]
    assert header == "x1,x2,x3,value"
    back = read_field_csv(path, g1, gcs)
    np.testing.assert_array_equal(back.values, evaluate_full(u).values)
