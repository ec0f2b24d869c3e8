import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strongalg.core import GermsAlgebra, MatrixAlgebra
from strongalg.errors import ContractionError
from strongalg.factorization import (
    P,
    Q,
    Decomposition,
    apply_R,
    apply_T,
    invert_in_subalgebra,
    solve_canonical_factorization,
    solve_pair_equations,
    verify_factorization,
)
from strongalg.oracles import finite_section_solve, scalar_wiener_hopf_oracle, toeplitz_matrix
from strongalg.serialization import wiener_from_json
from strongalg.wiener import WienerElement, wiener_multiply

S = MatrixAlgebra(1)
FIXTURES = Path(__file__).parent / "fixtures"


def scalar_symbol(coeffs):
    return WienerElement.from_coefficients(S, {n: [[c]] for n, c in coeffs.items()})


def closed_form_pair():
    a_plus = scalar_symbol({0: 1.0, -1: -0.3})
    a_minus = scalar_symbol({0: 1.0, 1: -0.4})
    return a_minus, a_plus


def test_projection_identities():
    rng = np.random.default_rng(0)
    x = WienerElement.random(MatrixAlgebra(2), rng, 6)
    assert np.array_equal((P(x) + Q(x)).coeffs, x.coeffs)
    assert np.array_equal(P(P(x)).coeffs, P(x).coeffs)
    assert not np.any(P(Q(x)).coeffs)
    assert P(x).norm(0) + Q(x).norm(0) == pytest.approx(x.norm(0))
    d = Decomposition()
    assert d.norm_P(0) == d.norm_Q(0) == 1.0


def test_apply_T_trivial_cases():
    rng = np.random.default_rng(1)
    x = WienerElement.random(S, rng, 4)
    one = x.one_like()
    assert apply_T(one, x).allclose(x)
    a = WienerElement.random(S, rng, 3)
    assert apply_T(a, one).allclose(P(a) + 1)


def test_apply_T_matches_toeplitz():
    rng = np.random.default_rng(2)
    a = WienerElement.random(S, rng, 3)
    x = WienerElement.random(S, rng, 5)
    K = 8
    idx = np.arange(-K, K + 1)
    T = toeplitz_matrix(a, idx, idx)
    keep = (idx < 0).astype(float)
    dense = keep[:, None] * T + np.diag(1 - keep)
    expect = dense @ x.padded(K).coeffs.ravel()
    got = apply_T(a, x).padded(K).coeffs.ravel()
    assert np.allclose(got, expect, atol=1e-13)


def test_apply_R_definition():
    rng = np.random.default_rng(3)
    alg = MatrixAlgebra(2)
    a = WienerElement.random(alg, rng, 2)
    x = WienerElement.random(alg, rng, 2)
    assert apply_R(a, x).allclose(P(x) + Q(wiener_multiply(x, a)))


def test_pair_equations_zero_symbol():
    rng = np.random.default_rng(4)
    f = WienerElement.random(S, rng, 3)
    g = WienerElement.random(S, rng, 3)
    x, y, _ = solve_pair_equations(f.zero_like(), f, g)
    assert x.allclose(f) and y.allclose(g)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pair_equations_match_finite_section(seed):
    rng = np.random.default_rng(seed)
    a = WienerElement.random(S, rng, 3, scale=0.6)
    f = WienerElement.random(S, rng, 2)
    x, _, _ = solve_pair_equations(a, f, f, tol=1e-13)
    ref = finite_section_solve(a, f, 120)
    K = min(x.half_width, 40)
    assert np.allclose(x.padded(120).truncated(K).coeffs, ref.truncated(K).coeffs, atol=1e-10)


def test_pair_equations_contraction():
    with pytest.raises(ContractionError):
        one = scalar_symbol({0: 1.0})
        solve_pair_equations(scalar_symbol({1: 1.5}), one, one)


def test_factorization_of_unit():
    one = WienerElement.constant(MatrixAlgebra(2).one())
    res = solve_canonical_factorization(one)
    assert res.residual == 0.0
    assert res.a_plus.allclose(one) and res.a_minus.allclose(one)
    rep = verify_factorization(one, res)
    assert rep.passed and rep.residual_plus_minus == 0.0


def test_scalar_closed_form():
    a_minus, a_plus = closed_form_pair()
    a = a_minus * a_plus
    res = solve_canonical_factorization(a, tol=1e-10)
    assert res.residual <= 1e-8
    assert res.a_plus.allclose(a_plus, atol=1e-8)
    assert res.a_minus.allclose(a_minus, atol=1e-8)
    assert res.membership["exact"]
    rep = verify_factorization(a, res)
    assert rep.minus_plus_ok and rep.plus_minus_ok


def test_scalar_matches_log_split_oracle():
    rng = np.random.default_rng(6)
    for _ in range(3):
        a = 1 - WienerElement.random(S, rng, 6, scale=0.7)
        res = solve_canonical_factorization(a)
        om, op = scalar_wiener_hopf_oracle(a)
        K = 20
        assert np.allclose(res.a_plus.padded(K).truncated(K).coeffs, op.truncated(K).coeffs, atol=1e-6)
        assert np.allclose(res.a_minus.padded(K).truncated(K).coeffs, om.truncated(K).coeffs, atol=1e-6)


def test_matrix_symbol():
    rng = np.random.default_rng(7)
    alg = MatrixAlgebra(2)
    C = WienerElement.random(alg, rng, 3)
    a = 1 - 0.1 * C
    res = solve_canonical_factorization(a)
    assert res.residual <= 1e-8
    assert res.membership["exact"]
    assert res.fixed_point_residuals["x"] <= 1e-9


def test_iteration_log_is_geometric():
    a_minus, a_plus = closed_form_pair()
    res = solve_canonical_factorization(a_minus * a_plus, tol=1e-10)
    log = res.iteration_log["x"]
    assert log.ratio == pytest.approx(0.82)
    assert log.observed_rate() <= log.ratio + 1e-9
    inc = np.array(log.increments)
    assert np.all(inc[1:] <= log.ratio * inc[:-1] * (1 + 1e-9))


def test_contraction_violated():
    a = scalar_symbol({0: 1.0, 1: 0.7, -1: 0.6})
    with pytest.raises(ContractionError):
        solve_canonical_factorization(a)


def test_germs_factorization():
    alg = GermsAlgebra(degree=3, tracked=(1.0, 0.5))
    a = WienerElement.from_coefficients(alg, {0: [1, 0.1, 0, 0], 1: [0.2, 0, 0, 0], -1: [0, 0.1, 0, 0]})
    res = solve_canonical_factorization(a, alpha=1.0, beta=1.0)
    assert res.residual <= 1e-8
    assert res.membership["exact"]


def test_series_inverse_branch():
    x = scalar_symbol({0: 1.0, -1: -1.2, -2: 0.35})
    w, method = invert_in_subalgebra(x, "plus", 0, 1e-11)
    assert method == "series"
    assert (wiener_multiply(x, w) - 1).norm(0) <= 1e-11
    assert w.support()[1] <= 0


def test_ordering_witness_fixture():
    doc = json.loads((FIXTURES / "symbol_factor_matrix.json").read_text())
    a = wiener_from_json(doc)
    res = solve_canonical_factorization(a, tol=1e-8)
    rep = verify_factorization(a, res, tol=1e-8)
    assert rep.minus_plus_ok
    assert not rep.plus_minus_ok


def test_swapped_factors_fail_verification():
    rng = np.random.default_rng(8)
    alg = MatrixAlgebra(2)
    a = 1 - 0.3 * WienerElement.random(alg, rng, 2)
    res = solve_canonical_factorization(a)
    rep = verify_factorization(a, res)
    assert rep.passed
    assert rep.residual_plus_minus > 1e-4
