import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semialg import Polynomial, monomial_basis
from semialg.errors import DimensionMismatch
from semialg.poly import basis_size, mono_key


def P(n, terms):
    return Polynomial(n, terms)


class TestArithmetic:
    def test_difference_of_squares(self):
        a = P(1, {(1,): 1.0, (0,): 1.0})  # x + 1
        b = P(1, {(1,): 1.0, (0,): -1.0})  # x - 1
        assert a * b == P(1, {(2,): 1.0, (0,): -1.0})

    def test_add_zero_identity(self):
        p = P(2, {(1, 1): 2.5, (0, 2): -1.0})
        assert p + Polynomial.zero(2) == p

    def test_square_of_binomial(self):
        # (x1 - 2 x2)^2 = x1^2 - 4 x1 x2 + 4 x2^2
        b = P(2, {(1, 0): 1.0, (0, 1): -2.0})
        assert b * b == P(2, {(2, 0): 1.0, (1, 1): -4.0, (0, 2): 4.0})

    def test_no_zero_coefficients_stored(self):
        a = P(1, {(1,): 1.0, (0,): 3.0})
        b = P(1, {(1,): -1.0, (0,): 1.0})
        assert (0,) * 1 not in {m for m in (a + b).terms if (a + b).terms[m] == 0.0}
        assert all(c != 0.0 for c in (a + b).terms.values())
        assert (a - a).is_zero()

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            P(1, {(1,): 1.0}) + P(2, {(1, 0): 1.0})

    def test_zero_polynomial_degree(self):
        assert Polynomial.zero(3).degree == 0

    def test_power(self):
        x = Polynomial.variable(1, 0)
        assert x**3 == P(1, {(3,): 1.0})
        assert x**0 == Polynomial.constant(1, 1.0)


class TestBasis:
    def test_two_vars_degree_one(self):
        assert monomial_basis(2, 1) == [(0, 0), (1, 0), (0, 1)]

    def test_size_for_moment_matrix(self):
        assert len(monomial_basis(3, 2)) == 10

    def test_constant_only(self):
        assert monomial_basis(1, 0) == [(0,)]

    def test_strictly_increasing_and_counts(self):
        for n in range(1, 7):
            for d in range(7):
                basis = monomial_basis(n, d)
                keys = [mono_key(m) for m in basis]
                assert keys == sorted(keys)
                assert len(set(keys)) == len(keys)
                # independent combinatorial counter
                brute = sum(
                    1
                    for exps in itertools.product(range(d + 1), repeat=n)
                    if sum(exps) <= d
                )
                assert len(basis) == brute == basis_size(n, d)


class TestEvaluate:
    def test_circle_point(self):
        p = P(2, {(2, 0): 1.0, (0, 2): 1.0, (0, 0): -1.0})
        assert abs(p.evaluate([0.3827, 0.9239])) < 1e-4

    def test_constant_at_origin(self):
        p = P(2, {(0, 0): 4.5, (2, 1): -3.0})
        assert p.evaluate([0.0, 0.0]) == 4.5

    def test_hand_arithmetic(self):
        p = P(2, {(2, 0): 1.0, (1, 1): -4.0, (0, 2): 4.0})
        assert p.evaluate([1.0, 1.0]) == pytest.approx(1.0)

    def test_point_length_checked(self):
        with pytest.raises(DimensionMismatch):
            Polynomial.variable(2, 0).evaluate([1.0])


def _poly_strategy(n):
    basis = monomial_basis(n, 3)
    return st.dictionaries(
        st.sampled_from(basis),
        st.floats(min_value=-4.0, max_value=4.0).filter(lambda c: abs(c) > 1e-3),
        min_size=1,
        max_size=5,
    ).map(lambda terms: Polynomial(n, terms))


@given(
    n=st.integers(min_value=1, max_value=3),
    data=st.data(),
)
@settings(max_examples=60, deadline=None)
def test_product_evaluation_identity(n, data):
    a = data.draw(_poly_strategy(n))
    b = data.draw(_poly_strategy(n))
    point = data.draw(
        st.lists(st.floats(min_value=-1.0, max_value=1.0), min_size=n, max_size=n)
    )
    lhs = (a * b).evaluate(point)
    rhs = a.evaluate(point) * b.evaluate(point)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


@given(n=st.integers(min_value=1, max_value=3), data=st.data())
@settings(max_examples=40, deadline=None)
def test_arith_canonical_form(n, data):
    a = data.draw(_poly_strategy(n))
    b = data.draw(_poly_strategy(n))
    for result in (a + b, a - b, a * b, -a):
        assert all(c != 0.0 for c in result.terms.values())
        assert all(len(m) == n for m in result.terms)
