from fractions import Fraction

import pytest

from exact_arith import GaussianRational
from gw import (InterpolationError, Profile, ProfileError, closed_multilinear_coef, connected_family,
                connected_from_disconnected, connected_invariant, degeneration_rhs, disconnected_series,
                formula_sides, general_disconnected_series, genus_of, interpolate_P, multilinear_value,
                one_point_connected, q_function, reassemble_disconnected, z_variables)


def test_profile():
    a = Profile([1, 2, 1])
    assert a.total == 4
    assert a.aut_order() == 2
    assert a.sub([1]) == Profile([2])
    with pytest.raises(ProfileError):
        Profile([0, 1])


@pytest.mark.parametrize('mu_len,nu_len,degrees,genus', [
    (1, 1, (0,), 0),
    (1, 1, (2,), 1),
    (1, 1, (1,), None),
    (1, 2, (0, 1), 0),
    (1, 3, (0,), None),
])
def test_genus_of(mu_len, nu_len, degrees, genus):
    assert genus_of(mu_len, nu_len, degrees) == genus


def test_degree_one_disconnected_series():
    series = disconnected_series(1, Profile([1]), 1, 3).series
    assert series.coef((-1,)) == 1
    assert series.coef((1,)) == Fraction(23, 24)


def test_degree_one_connected_series_is_varsigma():
    connected = connected_from_disconnected(1, Profile([1]), 1, 5)
    assert connected.invariant((0,)) == 1
    assert connected.invariant((2,)) == Fraction(1, 24)
    assert connected.invariant((4,)) == Fraction(1, 1920)
    assert connected.invariant((1,)) == 0


def test_one_part_one_point_values():
    # varsigma(2z)^2 / (4 varsigma(z)) = z + 7/24 z^3 + ...
    assert connected_invariant(2, Profile([2]), (0,)) == 1
    assert connected_invariant(2, Profile([2]), (2,)) == Fraction(7, 24)


def test_sum_of_parts_must_match():
    with pytest.raises(ProfileError):
        disconnected_series(3, Profile([1, 1]), 1, 3)
    with pytest.raises(ProfileError):
        general_disconnected_series(Profile([2]), Profile([1]), 1, 3)


def test_subset_recursion_reassembles():
    family = connected_family(2, Profile([1, 1]), 2, 3)
    full = disconnected_series(2, Profile([1, 1]), 2, 3).series
    assert reassemble_disconnected(family, 2, 3).agrees_with(full)


def test_one_point_connected_matches_subset_recursion():
    general = one_point_connected(Profile([1]), Profile([1]), 4)
    one_part = connected_from_disconnected(1, Profile([1]), 1, 4)
    assert general.series.agrees_with(one_part.series)


def test_q_function_single_variable():
    # varsigma(2z)/varsigma(z)
    q = q_function((2,), ('z1',), 2)
    assert q.coef((0,)) == 2
    assert q.coef((2,)) == Fraction(1, 4)
    with pytest.raises(ProfileError):
        q_function((1, 2), ('z1',), 2)


def test_closed_forms_need_k_and_n():
    with pytest.raises(ProfileError):
        closed_multilinear_coef(0, ('z1',), 3)


@pytest.mark.parametrize('connected', [True, False])
def test_closed_form_matches_wedge_side(connected):
    lhs, closed = formula_sides(1, 1, 4, 400, connected)
    assert lhs.agrees_with(closed)


def test_multilinear_value_of_known_polynomial():
    def evaluate(point):
        a1, a2 = point
        return GaussianRational(3 * a1 * a2 + (a1 + a2) ** 2)

    assert multilinear_value(evaluate, 2, 2, 100) == Fraction(5, 2)


def test_multilinear_value_detects_low_degree_bound():
    with pytest.raises(InterpolationError):
        multilinear_value(lambda point: GaussianRational(sum(point) ** 3), 1, 1, 100)
    with pytest.raises(InterpolationError):
        multilinear_value(lambda point: GaussianRational(1), 3, 10, 5)


def test_interpolated_P_genus_one():
    # a^2/12 - 1/24 from the one-part one-point series
    poly = interpolate_P(1, (2,), 1, 400)
    assert poly.coef((2,)) == Fraction(1, 12)
    assert poly.coef((0,)) == Fraction(-1, 24)
    assert poly.multilinear_coef() == 0
    assert poly.total_degree() <= 2


def test_interpolated_P_outside_dimension_constraint_is_zero():
    assert interpolate_P(1, (1,), 1, 400).is_zero()


@pytest.mark.parametrize('A,a,degrees', [
    (1, (1,), (0, 0)),
    (2, (1, 1), (0, 1)),
    (2, (2,), (1, 1)),
])
def test_degeneration_identity(A, a, degrees):
    assert degeneration_rhs(A, Profile(a), degrees) == connected_invariant(A, Profile(a), degrees)


def test_degeneration_needs_two_insertions():
    with pytest.raises(ProfileError):
        degeneration_rhs(1, Profile([1]), (0,))


def test_z_variables():
    assert z_variables(3) == ('z1', 'z2', 'z3')
