import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strongalg.core import (
    Element,
    GermsAlgebra,
    KondratievAlgebra,
    MatrixAlgebra,
    instance_from_spec,
    instance_spec,
    multi_indices,
    multiply,
    norm,
    vage_constant,
    validate_strong_inequality,
)
from strongalg.errors import DivergenceError, GradeError, InstanceMismatchError, LadderError

INSTANCES = [MatrixAlgebra(1), MatrixAlgebra(3), GermsAlgebra(degree=6), KondratievAlgebra(variables=2, degree=3)]


def wallis_partial(n_terms):
    # prod (1 - 1/(2k)^2)^-1 -> pi/2
    k = np.arange(1, n_terms + 1, dtype=float)
    return float(np.prod(1.0 / (1.0 - 1.0 / (2 * k) ** 2)))


@pytest.mark.parametrize("alg", INSTANCES, ids=lambda a: a.kind)
def test_unit_has_norm_one_everywhere(alg):
    for g in alg.tracked_grades:
        assert norm(alg.one(), g) == pytest.approx(1.0, abs=1e-15)
        assert norm(alg.zero(), g) == 0.0


def test_germs_monomial_norm():
    alg = GermsAlgebra(degree=4)
    z = alg.element([0, 1, 0, 0, 0])
    assert norm(z, 0.5) == 0.5


def test_kondratiev_first_variable_norm():
    alg = KondratievAlgebra(variables=2, degree=3)
    e1 = np.zeros(alg.coef_shape)
    e1[alg.indices.index((1, 0))] = 1
    assert norm(alg.element(e1), 2) == pytest.approx(0.5, abs=1e-15)


def test_multi_index_order():
    assert multi_indices(2, 2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert len(multi_indices(3, 3)) == math.comb(6, 3)


def test_germs_square():
    alg = GermsAlgebra(degree=4)
    p = alg.element([1, 1, 0, 0, 0])
    assert np.allclose((p * p).data, [1, 2, 1, 0, 0])
    assert (p * p).exact


def test_germs_truncation_goes_to_tail():
    alg = GermsAlgebra(degree=2, tracked=(1.0, 0.5))
    p = alg.element([0, 0, 1])
    sq = p * p
    assert not np.any(sq.data)
    assert sq.tail_bound(0.5) == pytest.approx(0.5**4)
    assert sq.tail_bound(1.0) == pytest.approx(1.0)


def test_wick_square():
    alg = KondratievAlgebra(variables=2, degree=3)
    xi = np.zeros(alg.coef_shape)
    xi[alg.indices.index((1, 0))] = 1
    sq = multiply(alg.element(xi), alg.element(xi))
    expect = np.zeros(alg.coef_shape)
    expect[alg.indices.index((2, 0))] = 1
    assert np.allclose(sq.data, expect)


@pytest.mark.parametrize("alg", INSTANCES, ids=lambda a: a.kind)
def test_unit_law(alg):
    b = alg.random(np.random.default_rng(1))
    assert (alg.one() * b).allclose(b)
    assert (b * alg.one()).allclose(b)


def test_instance_mismatch():
    with pytest.raises(InstanceMismatchError):
        MatrixAlgebra(2).one() * MatrixAlgebra(3).one()


def test_grade_errors():
    with pytest.raises(GradeError):
        MatrixAlgebra(2).check_grade(1)
    with pytest.raises(GradeError):
        GermsAlgebra().check_grade(-0.5)
    with pytest.raises(GradeError):
        KondratievAlgebra().check_grade(1.5)
    with pytest.raises(LadderError):
        KondratievAlgebra().constant(1, 0)


def test_vage_constant_wallis():
    vc = vage_constant(0, 2)
    assert vc.limit == pytest.approx(math.sqrt(math.pi / 2), abs=1e-12)
    assert vc.limit == pytest.approx(math.sqrt(wallis_partial(10**7)), abs=1e-7)


def test_vage_constant_two_term_truncation():
    vc = vage_constant(3, 5, truncation=(1, 1))
    assert vc.truncated == pytest.approx(math.sqrt(1.25), abs=1e-15)


def test_vage_constant_monotone_in_truncation():
    values = [vage_constant(0, 2, (K, D)).truncated for K, D in [(1, 1), (1, 3), (2, 3), (4, 6), (8, 10)]]
    assert values == sorted(values)
    assert values[-1] < vage_constant(0, 2).limit


def test_vage_constant_diverges():
    with pytest.raises(DivergenceError):
        vage_constant(0, 1)


@pytest.mark.parametrize(
    "alg,alpha,beta",
    [
        (GermsAlgebra(degree=6), 1.0, 0.5),
        (GermsAlgebra(degree=6), 0.5, 0.5),
        (MatrixAlgebra(4), 0, 0),
        (KondratievAlgebra(variables=2, degree=3), 0, 2),
    ],
)
def test_validation_passes(alg, alpha, beta):
    rep = validate_strong_inequality(alg, alpha, beta, sample_count=100, seed=3)
    assert rep.passed
    assert rep.worst_ratio <= rep.constant * (1 + 1e-10)


def test_validation_matrix_identity_ratio():
    alg = MatrixAlgebra(2)
    one = alg.one()
    assert (one * one).norm(0) / (one.norm(0) * one.norm(0)) == 1.0


def test_validation_rejects_inadmissible_pair():
    with pytest.raises(LadderError):
        validate_strong_inequality(KondratievAlgebra(), 0, 1)


def test_validation_is_seeded():
    alg = GermsAlgebra(degree=5)
    a = validate_strong_inequality(alg, 1.0, 0.5, 50, seed=11)
    b = validate_strong_inequality(alg, 1.0, 0.5, 50, seed=11)
    assert a.worst_ratio == b.worst_ratio


@pytest.mark.parametrize("alg", INSTANCES[2:], ids=lambda a: a.kind)
def test_norm_monotone_along_ladder(alg):
    x = alg.random(np.random.default_rng(5))
    grades = alg.tracked_grades
    for g in grades:
        for h in grades:
            if alg.le(g, h):
                assert x.norm(h) <= x.norm(g) * (1 + 1e-12)


@pytest.mark.parametrize("alg", INSTANCES, ids=lambda a: a.kind)
def test_spec_round_trip(alg):
    assert instance_from_spec(instance_spec(alg)) == alg


def test_matrix_norm_is_spectral():
    rng = np.random.default_rng(0)
    for n in (1, 2, 3, 5):
        m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        assert Element(MatrixAlgebra(n), m).norm(0) == pytest.approx(np.linalg.norm(m, 2), rel=1e-12)


coef = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(coef, min_size=5, max_size=5),
    st.lists(coef, min_size=5, max_size=5),
    st.lists(coef, min_size=5, max_size=5),
)
def test_germs_associative_on_truncation(a, b, c):
    alg = GermsAlgebra(degree=4)
    x, y, z = (alg.element(v) for v in (a, b, c))
    left, right = (x * y) * z, x * (y * z)
    assert np.allclose(left.data, right.data, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(coef, min_size=10, max_size=10), st.lists(coef, min_size=10, max_size=10))
def test_kondratiev_graded_inequality_property(a, b):
    alg = KondratievAlgebra(variables=2, degree=3)
    x, y = alg.element(a), alg.element(b)
    A = alg.constant(2, 0)
    lhs = (x * y).norm_bound(2)
    rhs = A * x.norm(0) * y.norm(2)
    assert lhs <= rhs * (1 + 1e-10) + 1e-300
