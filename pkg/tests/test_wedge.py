from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from exact_arith import ParseError
from wedge import (FockCutoffError, LinearForm, WedgeError, WedgeGenerator, WedgeWord, clear_vev_cache,
                   confirm_vacuum_rules, fock_vev, vev)


@pytest.fixture(autouse=True)
def fresh_cache():
    clear_vev_cache()
    yield


def test_linear_form_parse_and_render():
    form = LinearForm.parse('z1 - 2z2')
    assert form.coeffs == (('z1', 1), ('z2', -2))
    assert str(form) == 'z1-2z2'
    assert LinearForm.parse('0').is_zero()
    assert (form - form).is_zero()
    with pytest.raises(ParseError):
        LinearForm.parse('2+z')


def test_word_parse():
    word = WedgeWord.parse('a2 E0(z) a-2')
    assert len(word) == 3
    assert word.energy == 0
    assert word.variables() == ('z',)
    assert str(word) == 'a2 E0(z) a-2'


@pytest.mark.parametrize('text', ['a0', 'E0(0)', 'E1(z', 'b2', 'E(z)'])
def test_word_parse_rejects(text):
    with pytest.raises(ParseError):
        WedgeWord.parse(text)


def test_e_at_zero_argument_is_alpha():
    assert WedgeGenerator.e(2, LinearForm()) == WedgeGenerator.alpha(2)
    with pytest.raises(WedgeError):
        WedgeGenerator('E', 0)


def test_heisenberg_vevs():
    assert vev(WedgeWord.parse('a2 a-2'), ('z',), 2).coef((0,)) == 2
    assert vev(WedgeWord.parse('a1 a1 a-1 a-1'), ('z',), 2).coef((0,)) == 2
    assert vev(WedgeWord.parse('a-1 a1'), ('z',), 2).is_zero()


def test_nonzero_energy_vanishes():
    assert vev(WedgeWord.parse('a1 E0(z)'), ('z',), 3).is_zero()


_generators = st.one_of(
    st.sampled_from([k for k in range(-3, 4) if k]).map(WedgeGenerator.alpha),
    st.tuples(st.integers(-3, 3), st.integers(1, 5)).map(
        lambda pair: WedgeGenerator.e(pair[0], LinearForm.var(f"z{pair[1]}"))),
)


@settings(max_examples=200, deadline=None)
@given(st.lists(_generators, min_size=1, max_size=5).filter(lambda gens: sum(g.energy for g in gens) != 0))
def test_random_words_with_nonzero_energy_vanish(gens):
    variables = tuple(f"z{j}" for j in range(1, 6))
    assert vev(WedgeWord(gens), variables, 2).is_zero()


@pytest.mark.parametrize('a', range(1, 11))
def test_alpha_pair_vev_is_the_energy(a):
    word = WedgeWord([WedgeGenerator.alpha(a), WedgeGenerator.alpha(-a)])
    series = vev(word, ('z',), 2)
    assert series.coef((0,)) == a
    assert all(coef == 0 for exps, coef in series.items() if exps != (0,))


def test_single_e0_is_inverse_varsigma():
    series = vev(WedgeWord.parse('E0(z)'), ('z',), 3)
    assert series.coef((-1,)) == 1
    assert series.coef((1,)) == Fraction(-1, 24)
    assert series.coef((3,)) == Fraction(7, 5760)


def test_one_part_degree_one_word():
    # varsigma(z) + 1/varsigma(z)
    series = vev(WedgeWord.parse('a1 E0(z) a-1'), ('z',), 3)
    assert series.coef((-1,)) == 1
    assert series.coef((1,)) == Fraction(23, 24)
    assert series.coef((3,)) == Fraction(247, 5760)


def test_charged_pair_collapses():
    # varsigma(z + w) <E0(z + w)> = 1
    series = vev(WedgeWord.parse('E1(z) E-1(w)'), ('w', 'z'), 4)
    assert series.coef((0, 0)) == 1
    assert all(coef == 0 for exps, coef in series.items() if exps != (0, 0))
    doubled = vev(WedgeWord.parse('E2(z) E-2(w)'), ('w', 'z'), 4)
    assert doubled.coef((0, 0)) == 2


def test_undeclared_variables():
    with pytest.raises(WedgeError):
        vev(WedgeWord.parse('E0(z)'), ('w',), 3)


@pytest.mark.parametrize('text,variables', [
    ('a1 E0(z) a-1', ('z',)),
    ('a2 E0(z) a-2', ('z',)),
    ('E1(z) E-1(w)', ('w', 'z')),
    ('a1 E-1(z)', ('z',)),
    ('E0(z) E0(w)', ('w', 'z')),
])
def test_fock_oracle_agrees(text, variables):
    word = WedgeWord.parse(text)
    cutoff = 2 * sum(abs(g.energy) for g in word) + 2
    assert vev(word, variables, 4).agrees_with(fock_vev(word, variables, 4, cutoff))


@pytest.mark.parametrize('text', [
    'E1(z1) E-1(z2) E0(z3)',
    'E2(z1) a-1 E-1(z2)',
    'a1 E1(z1) E-1(z2) a-1',
    'E1(z1) E1(z2) E-2(z3)',
])
def test_fock_oracle_agrees_on_longer_charged_words(text):
    word = WedgeWord.parse(text)
    variables = tuple(sorted(word.variables()))
    cutoff = 2 * sum(abs(g.energy) for g in word) + 2
    assert vev(word, variables, 3).agrees_with(fock_vev(word, variables, 3, cutoff))


def test_fock_oracle_limits():
    with pytest.raises(WedgeError):
        fock_vev(WedgeWord.parse('E0(z+w)'), ('w', 'z'), 3, 4)
    with pytest.raises(FockCutoffError):
        fock_vev(WedgeWord.parse('a1 a-1'), ('z',), 2, 0)


def test_vacuum_rules():
    result = confirm_vacuum_rules(2, 3)
    assert result['success']
    assert all(ok for _, ok in result['checks'])
