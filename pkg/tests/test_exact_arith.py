from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from exact_arith import (I, ONE, ZERO, GaussianRational, ParseError, binomial, factorial, falling_factorial,
                         format_gaussian, format_rational, ipow, parse_gaussian, parse_rational)

fractions = st.fractions(max_denominator=50).filter(lambda f: abs(f) < 1000)
gaussians = st.builds(GaussianRational, fractions, fractions)


def test_i_squared_is_minus_one():
    assert I * I == -ONE
    assert I ** 4 == ONE
    assert ipow(-1) == -I
    assert ipow(7) == -I


def test_mixed_arithmetic_with_fractions_and_ints():
    z = GaussianRational(Fraction(1, 2), 3)
    assert 1 + z == GaussianRational(Fraction(3, 2), 3)
    assert 2 * z == GaussianRational(1, 6)
    assert z - 1 == GaussianRational(Fraction(-1, 2), 3)
    assert 1 - z == GaussianRational(Fraction(1, 2), -3)
    assert (1 / I) == -I


def test_real_values_compare_with_fractions():
    assert GaussianRational(Fraction(1, 24)) == Fraction(1, 24)
    assert GaussianRational(Fraction(1, 24)).real_value() == Fraction(1, 24)
    with pytest.raises(ValueError):
        I.real_value()


def test_immutable():
    with pytest.raises(AttributeError):
        ONE.re = 2


def test_division_by_zero():
    with pytest.raises(ZeroDivisionError):
        ONE / ZERO


@given(gaussians, gaussians)
def test_field_axioms(a, b):
    assert a + b == b + a
    assert a * b == b * a
    if b:
        assert (a / b) * b == a


@given(gaussians)
def test_hash_agrees_with_equality(a):
    assert hash(a) == hash(GaussianRational(a.re, a.im))
    if a.is_real():
        assert hash(a) == hash(a.re)


def test_combinatorics():
    assert factorial(0) == 1
    assert factorial(6) == 720
    assert binomial(5, 2) == 10
    assert binomial(3, 5) == 0
    assert falling_factorial(5, 2) == 20
    assert falling_factorial(3, 0) == 1
    with pytest.raises(ValueError):
        factorial(-1)


@pytest.mark.parametrize('value,text', [
    (GaussianRational(Fraction(1, 24)), '1/24'),
    (GaussianRational(0, Fraction(-1, 5760)), '-1/5760*i'),
    (I, '1*i'),
    (GaussianRational(Fraction(1, 2), Fraction(-1, 3)), '1/2-1/3*i'),
    (GaussianRational(-2, 1), '-2+1*i'),
    (ZERO, '0'),
])
def test_format_and_parse(value, text):
    assert format_gaussian(value) == text
    assert parse_gaussian(text) == value


def test_format_rational_drops_unit_denominator():
    assert format_rational(Fraction(6, 3)) == '2'
    assert parse_rational(' -7/21 ') == Fraction(-1, 3)


@pytest.mark.parametrize('text', ['', '1/0', 'abc', '1/2*', '*i', '1.5', '1/2 + 1/3*i'])
def test_parse_rejects_malformed(text):
    with pytest.raises(ParseError):
        parse_gaussian(text)
