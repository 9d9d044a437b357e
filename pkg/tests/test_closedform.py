from fractions import Fraction

import pytest

from closedform import (CONVENTION_BOTH, CONVENTION_INFINITY_ONLY, CorrelatorKey, PreconditionError, gjv_hurwitz,
                        hurwitz_oracle, hurwitz_series_coefficient, hurwitz_table, k0_branch, labeling_convention,
                        partitions, purely_quantum, string_image, tau0_generating_identity)
from gw import Profile


@pytest.mark.parametrize('d,g,value', [
    ((0, 0, 0), 0, Fraction(1)),
    ((2,), 1, Fraction(1, 24)),
    ((1,), 1, Fraction(0)),
    ((0,), 1, Fraction(-1, 24)),
    ((0, 1, 1), 1, Fraction(-1, 12)),
    ((9,), 1, Fraction(0)),
])
def test_purely_quantum_values(d, g, value):
    assert purely_quantum(d, g) == value


def test_purely_quantum_is_symmetric():
    assert purely_quantum((0, 1, 3), 1) == purely_quantum((3, 0, 1), 1)


@pytest.mark.parametrize('d,g', [((0,), 0), ((0, 0), 0), ((1,), -1), ((-1, 2), 1)])
def test_purely_quantum_preconditions(d, g):
    with pytest.raises(PreconditionError):
        purely_quantum(d, g)


def test_hurwitz_series_coefficient_genus_one():
    poly = hurwitz_series_coefficient(('mu1',), 1)
    assert poly.coef((0,)) == Fraction(-1, 24)
    assert poly.coef((2,)) == Fraction(1, 24)


@pytest.mark.parametrize('g,mu,value', [
    (0, (1,), Fraction(1)),
    (0, (1, 1), Fraction(1)),
    (0, (1, 1, 1), Fraction(6)),
    (1, (2,), Fraction(1, 2)),
])
def test_gjv_values(g, mu, value):
    assert gjv_hurwitz(g, Profile(mu)) == value


def test_gjv_needs_a_profile():
    with pytest.raises(PreconditionError):
        gjv_hurwitz(0, Profile([]))


@pytest.mark.parametrize('g,mu', [(0, (2, 1)), (1, (1, 1)), (1, (2, 1)), (0, (2, 2)), (1, (3,))])
def test_oracle_matches_closed_formula(g, mu):
    mu = Profile(mu)
    assert hurwitz_oracle(g, Profile([mu.total]), mu, max_degree=4) == gjv_hurwitz(g, mu)


def test_oracle_bounds():
    with pytest.raises(PreconditionError):
        hurwitz_oracle(0, Profile([7]), Profile([7]), max_degree=6)
    with pytest.raises(PreconditionError):
        hurwitz_oracle(0, Profile([2]), Profile([1]))
    with pytest.raises(PreconditionError):
        hurwitz_oracle(0, Profile([1]), Profile([1]), convention='sideways')


def test_labeling_convention_is_pinned():
    result = labeling_convention(max_degree=3, max_genus=1)
    assert result['success']
    assert result['convention'] == CONVENTION_BOTH
    assert CONVENTION_INFINITY_ONLY in result['fitting']


def test_partitions():
    assert list(partitions(4)) == [(4,), (3, 1), (2, 2), (2, 1, 1), (1, 1, 1, 1)]


def test_hurwitz_table_with_oracle():
    rows = hurwitz_table(1, 3, with_oracle=True, oracle_degree=3)
    assert len(rows) == 2 * (1 + 2 + 3)
    assert all(row['value'] == row['oracle'] for row in rows)


def test_k0_branch():
    assert k0_branch(1) == Fraction(-1, 24)
    assert k0_branch(2) == Fraction(7, 5760)
    with pytest.raises(PreconditionError):
        k0_branch(0)


@pytest.mark.parametrize('d,g', [((0, 0), 0), ((), 1), ((1, 1), 1), ((2,), 1), ((0, 2), 1), ((3, 1), 1)])
def test_string_equation_on_closed_formula(d, g):
    assert purely_quantum((0,) + d, g) == string_image(d, g)


def test_tau0_generating_identity():
    for n in (2, 3):
        result = tau0_generating_identity(n, 2)
        assert result['success'], result['mismatches']
    with pytest.raises(PreconditionError):
        tau0_generating_identity(1, 1)


def test_correlator_key():
    key = CorrelatorKey((1, 0), 0, 1)
    assert str(key) == '<tau1 tau0>_{0,1}'
    assert key.sorted() == CorrelatorKey((0, 1), 0, 1)
    assert key.g == 1 and key.n == 2
    assert key.passes_selection_rule()
    assert not CorrelatorKey((1,), 0, 1).passes_selection_rule()
    with pytest.raises(PreconditionError):
        CorrelatorKey((0,), -1, 0)
