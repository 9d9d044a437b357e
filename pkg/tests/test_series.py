from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from exact_arith import ONE, GaussianRational
from series import (LaurentSeries, MultiPoly, SeriesError, TruncatedSeries, canonical_form, coef_extract, compose,
                    exp_series, exp_univariate, reciprocal, s_series, series_of_form, varsigma, varsigma_product)

XY = ('x', 'y')


def test_varsigma_coefficients():
    s = varsigma('z', 5)
    assert s.coef((1,)) == 1
    assert s.coef((3,)) == Fraction(1, 24)
    assert s.coef((5,)) == Fraction(1, 1920)
    assert s.coef((2,)) == 0
    with pytest.raises(SeriesError):
        varsigma('z', 0)


def test_s_series_reciprocal():
    inv = s_series('z', 4).reciprocal()
    assert inv.coef((0,)) == 1
    assert inv.coef((2,)) == Fraction(-1, 24)
    assert inv.coef((4,)) == Fraction(7, 5760)


def test_coefficient_beyond_cap_is_an_error():
    f = TruncatedSeries.variable('x', XY, 2)
    with pytest.raises(SeriesError):
        f.coef((2, 1))
    with pytest.raises(SeriesError):
        coef_extract(f, (3, 0))


def test_constructor_drops_terms_beyond_cap():
    f = TruncatedSeries(XY, 1, {(1, 0): 2, (1, 1): 5})
    assert f.items() == [((1, 0), GaussianRational(2))]


def test_product_truncates():
    x = TruncatedSeries.variable('x', XY, 3)
    y = TruncatedSeries.variable('y', XY, 3)
    f = (x + y) ** 2
    assert f.coef((1, 1)) == 2
    assert ((x + y) ** 4).is_zero()


def test_reciprocal_of_one_minus_x():
    f = TruncatedSeries.one(('x',), 5) - TruncatedSeries.variable('x', ('x',), 5)
    inv = reciprocal(f)
    assert all(inv.coef((j,)) == 1 for j in range(6))
    with pytest.raises(SeriesError):
        TruncatedSeries.variable('x', ('x',), 5).reciprocal()


def test_compose_exp_of_two_x():
    inner = TruncatedSeries(('x',), 4, {(1,): 2})
    f = compose(exp_univariate('s', 4), inner)
    assert f.coef((3,)) == Fraction(8, 6)
    assert f == exp_series((('x', 2),), 1, ('x',), 4)


def test_exp_series_half_integer_scale():
    f = exp_series((('x', 1),), Fraction(1, 2), ('x',), 3)
    assert f.coef((2,)) == Fraction(1, 8)


def test_series_of_form_at_zero_form():
    assert series_of_form('varsigma', (), XY, 3).is_zero()
    assert series_of_form('invS', (('x', 0),), XY, 3) == TruncatedSeries.one(XY, 3)


def test_canonical_form_merges_and_sorts():
    assert canonical_form([('y', 1), ('x', 2), ('y', -1)]) == (('x', 2),)


def test_agrees_with_compares_up_to_smaller_cap():
    a = varsigma('z', 5)
    b = varsigma('z', 3)
    assert a.agrees_with(b)
    assert a != b
    assert a.with_cap(3) == b
    with pytest.raises(SeriesError):
        b.with_cap(4)


def test_embed_and_coefficient_in():
    f = TruncatedSeries(('x',), 3, {(1,): 1, (2,): 3})
    g = f.embed(('w', 'x'))
    assert g.coef((0, 2)) == 3
    h = TruncatedSeries(XY, 4, {(1, 2): 5, (1, 0): 1, (2, 1): 7})
    assert h.coefficient_in('x', 1).items() == [((0,), ONE), ((2,), GaussianRational(5))]


def test_laurent_inverse_varsigma():
    inv = varsigma_product([], [(('z', 1),)], ('z',), 3)
    assert inv.coef((-1,)) == 1
    assert inv.coef((1,)) == Fraction(-1, 24)
    assert inv.coef((3,)) == Fraction(7, 5760)
    assert inv.has_negative_exponents()
    with pytest.raises(SeriesError):
        inv.to_series()


def test_laurent_times_varsigma_is_one():
    inv = varsigma_product([], [(('z', 1),)], ('z',), 4)
    product = inv * LaurentSeries(varsigma('z', 6))
    assert product.coef((0,)) == 1
    assert all(product.coef((j,)) == 0 for j in range(1, product.cap + 1))


def test_varsigma_ratio_pairs_proportional_forms():
    ratio = varsigma_product([(('z', 2),)], [(('z', 1),)], ('z',), 4)
    assert not ratio.has_negative_exponents()
    # varsigma(2z)/varsigma(z) = e^{z/2} + e^{-z/2}
    assert ratio.coef((0,)) == 2
    assert ratio.coef((2,)) == Fraction(1, 4)


def test_unpaired_multivariate_denominator_is_rejected():
    with pytest.raises(SeriesError):
        varsigma_product([], [(('x', 1), ('y', 1))], XY, 3)
    with pytest.raises(SeriesError):
        varsigma_product([], [()], XY, 3)


def test_zero_numerator_gives_zero():
    assert varsigma_product([()], [(('x', 1),)], XY, 3).is_zero()


def test_multipoly_arithmetic():
    a = MultiPoly.variable('a', ('a', 'b'))
    b = MultiPoly.variable('b', ('a', 'b'))
    p = (a + b) ** 2
    assert p.coef((1, 1)) == 2
    assert p.multilinear_coef() == 2
    assert p.total_degree() == 2
    assert p.is_parity(0)
    assert not (p + a).is_parity(0)
    assert p.evaluate((1, 2)) == 9
    assert (p - p).is_zero()
    assert MultiPoly(('a',)).total_degree() == -1


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=3, max_size=3),
       st.lists(st.integers(-5, 5), min_size=3, max_size=3))
def test_series_multiplication_is_commutative(c1, c2):
    f = TruncatedSeries(XY, 2, {(0, 0): c1[0], (1, 0): c1[1], (0, 1): c1[2]})
    g = TruncatedSeries(XY, 2, {(0, 0): c2[0], (1, 1): c2[1], (0, 2): c2[2]})
    assert f * g == g * f
    assert (f + g) * f == f * f + g * f


_coefficients = st.dictionaries(st.sampled_from([(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]),
                                st.integers(-4, 4), max_size=6)


@settings(max_examples=40, deadline=None)
@given(_coefficients, _coefficients, _coefficients)
def test_series_ring_laws(a, b, c):
    f, g, h = (TruncatedSeries(XY, 2, terms) for terms in (a, b, c))
    assert (f * g) * h == f * (g * h)
    assert f * (g + h) == f * g + f * h
    assert (f + g) + h == f + (g + h)
    assert (f + (-f)).is_zero()
    assert f - g == -(g - f)


@pytest.mark.parametrize('cap', range(1, 10))
def test_varsigma_is_odd(cap):
    s = varsigma('z', cap)
    minus_z = TruncatedSeries.variable('z', ('z',), cap).scale(-1)
    flipped = compose(s, minus_z)
    assert flipped == -s
    assert flipped * s == -(s * s)


def test_coef_extract_within_cap():
    square = varsigma('z', 5) ** 2
    assert coef_extract(square, (2,)) == 1
    assert coef_extract(square, (4,)) == Fraction(1, 12)
    assert coef_extract(square, (3,)) == 0
    with pytest.raises(SeriesError):
        coef_extract(square, (6,))
