from fractions import Fraction

import pytest

from closedform import CorrelatorKey, PreconditionError, purely_quantum
from exact_arith import I, GaussianRational
from quantization import (CONSTANT_TERM, DensityFormatError, DiffPoly, NormalizationError,
                          TableInconsistencyError, TauCoefficients, WindowedPElement, WindowError, assemble_tau,
                          bracket_targets, builtin_densities, chain_target, classical_correlator,
                          classical_slice_mismatches, clear_chain_cache, commutator, commutator_target,
                          default_window, dilaton_residuals, dx, format_density, hamiltonian_density,
                          iterated_commutator, known_zero, load_density, moyal_star, normalization_exponent,
                          normalize, phi, phi0_tilde, poisson_bracket, positive_chain, quantum_correlator,
                          quantum_intersection, quantum_P, tilde_star, tilde_star_target, var_deriv, window_exact)

u = DiffPoly.u


@pytest.fixture(autouse=True)
def fresh_chain_cache():
    clear_chain_cache()
    yield


def test_dx_and_variational_derivative():
    assert dx(u(0) ** 2) == u(0) * u(1) * 2
    assert var_deriv(u(0) * u(2)) == u(2) * 2
    assert var_deriv(u(0) ** 3 * Fraction(1, 6)) == u(0) ** 2 * Fraction(1, 2)


def test_hbar1_variational_derivative_has_constant_term():
    delta = var_deriv(hamiltonian_density(1))
    assert delta.constant_part(0, 1) == GaussianRational(0, Fraction(-1, 24))
    assert delta.constant_part(0, 0) == 0


def test_differential_degrees():
    # u_i has degree i, eps has degree -1
    assert (u(0) * u(2)).differential_degrees() == {2}
    assert DiffPoly.monomial(1, (1,), eps=2).differential_degrees() == {-2}
    assert hamiltonian_density(1).differential_degrees() == {0}


def test_only_two_builtin_densities():
    assert sorted(builtin_densities()) == [1, 2]
    with pytest.raises(PreconditionError):
        hamiltonian_density(3)


def test_load_density():
    text = ['# dispersionless part of Hbar_0', '1/2 * u0^2']
    assert load_density(text) == u(0) ** 2 * Fraction(1, 2)
    mixed = load_density(['-1/24*i * hbar * u0', '1/24 * eps^2 * u0 u2'])
    assert mixed == (DiffPoly.monomial(GaussianRational(0, Fraction(-1, 24)), (1,), hbar=1)
                     + DiffPoly.monomial(Fraction(1, 24), (1, 0, 1), eps=2))


def test_builtin_density_survives_formatting():
    for d, density in builtin_densities().items():
        assert load_density(format_density(density).splitlines()) == density


@pytest.mark.parametrize('lines,where', [
    (['1/2 * v0'], 'line 1'),
    (['# comment', 'x * u0'], 'line 2'),
    (['1/2 * u0', '1/2 * u0^x'], 'line 2'),
])
def test_load_density_errors_name_the_line(lines, where):
    with pytest.raises(DensityFormatError, match=where):
        load_density(lines)


def test_load_density_rejects_empty_text():
    with pytest.raises(DensityFormatError):
        load_density(['# nothing here', ''])


def test_canonical_commutation():
    p1, pm1 = WindowedPElement.p(1, 2), WindowedPElement.p(-1, 2)
    assert commutator(p1, pm1).terms == {(0, 1, ()): I}
    assert tilde_star(p1, pm1).terms == {(0, 1, ()): I}
    assert moyal_star(pm1, p1) == pm1 * p1
    assert poisson_bracket(p1, pm1).terms == {(0, 0, ()): I}


def test_star_of_squares():
    # p1^2 * p-1^2 = p1^2 p-1^2 + 4 i hbar p1 p-1 - 2 hbar^2
    p1, pm1 = WindowedPElement.p(1, 2), WindowedPElement.p(-1, 2)
    product = moyal_star(p1 * p1, pm1 * pm1)
    assert product.coefficient((-1, -1, 1, 1)) == 1
    assert product.coefficient((-1, 1), hbar=1) == 4 * I
    assert product.coefficient((), hbar=2) == -2


def test_window_checks():
    with pytest.raises(WindowError):
        WindowedPElement.p(3, 2)
    with pytest.raises(WindowError):
        WindowedPElement(0)
    with pytest.raises(WindowError):
        commutator(WindowedPElement.p(1, 2), WindowedPElement.p(1, 3))
    assert window_exact((1, -2), 3)
    assert not window_exact((2, 2), 3)
    assert default_window(2, (1, 1), 4) == 8


def test_phi():
    element = phi(u(1), 2)
    assert element.coefficient((1,)) == I
    assert element.coefficient((-2,)) == -2 * I
    assert element.coefficient((0,)) == 0
    tilde = phi0_tilde(u(0) ** 2, 1)
    assert tilde.coefficient((-1, 1)) == 2
    assert tilde.coefficient((0, 0)) == 1
    assert tilde.modes() == {0}


def test_hamiltonians_commute_on_exact_targets():
    window = 4
    bracket = commutator(phi0_tilde(hamiltonian_density(1), window), phi0_tilde(hamiltonian_density(2), window))
    exact = bracket.restrict(lambda key: key[0] <= 4 and key[1] <= 4 and window_exact(key[2], window))
    assert exact.is_zero()


def test_direct_target_coefficients_match_windowed_product():
    h1, h2 = hamiltonian_density(1), hamiltonian_density(2)
    product = tilde_star(phi0_tilde(h1, 3), phi0_tilde(h2, 3))
    targets = [t for t in bracket_targets(h1, h2, 3) if window_exact(t, 3)]
    assert (-1, 1) in targets and (-1, 0, 1) in targets
    direct = {(eps, hbar, t): c for t in targets for (eps, hbar), c in tilde_star_target(h1, h2, t).items()}
    assert direct
    assert direct == {k: c for k, c in product.terms.items() if window_exact(k[2], 3)}


@pytest.mark.parametrize('target', [(-3, -3, 3, 3), (-6, 3, 3), (-5, -1, 6), (-4, 0, 4), (-6, 6)])
def test_hamiltonians_commute_on_wide_targets(target):
    bracket = commutator_target(hamiltonian_density(1), hamiltonian_density(2), target)
    assert {key: c for key, c in bracket.items() if key[0] <= 4 and key[1] <= 4} == {}


def test_bracket_targets_are_mode_zero():
    targets = list(bracket_targets(hamiltonian_density(1), hamiltonian_density(2), 6))
    assert (0,) in targets and (-6, 6) in targets and (-3, -3, 3, 3) in targets
    assert all(sum(t) == 0 and max(map(abs, t)) <= 6 and len(t) <= 5 for t in targets)


@pytest.mark.parametrize('d,l,h,mode', [((1, 2), 0, 1, 3), ((2, 1), 0, 1, 2), ((2, 2), 1, 0, 2), ((2,), 1, 0, 3)])
def test_positive_chain_matches_restricted_commutator(d, l, h, mode):
    chain = positive_chain(d, l, h, mode, mode)
    at_mode = chain_target(iterated_commutator(d, mode), len(d), l, h, mode)
    wider = chain_target(iterated_commutator(d, mode + 2), len(d), l, h, mode)
    assert chain == at_mode
    assert chain.terms == wider.terms


def test_positive_chain_window_errors():
    with pytest.raises(WindowError):
        positive_chain((1,), 0, 0, 0, 2)
    with pytest.raises(WindowError):
        positive_chain((1,), 0, 0, 3, 2)


def test_quantum_P_ignores_part_order():
    assert quantum_P((2,), 1, 0, (1, 2)) == quantum_P((2,), 1, 0, (2, 1))


def test_normalization():
    key = CorrelatorKey((0, 1), 0, 1)
    assert normalization_exponent(key) == -1
    assert normalize(key, GaussianRational(0, Fraction(-1, 24))) == Fraction(-1, 24)
    with pytest.raises(NormalizationError):
        normalize(key, 1)


@pytest.mark.parametrize('d,l,h,value', [
    ((1,), 0, 1, Fraction(-1, 24)),
    ((2,), 1, 1, Fraction(1, 2880)),
    ((2,), 1, 0, Fraction(1, 24)),
    ((1,), 1, 0, Fraction(0)),
    ((2,), 0, 0, Fraction(0)),
])
def test_quantum_intersection_values(d, l, h, value):
    assert quantum_intersection(d, l, h) == value


def test_quantum_correlator_is_raw():
    assert quantum_correlator((1,), 0, 1) == GaussianRational(0, Fraction(-1, 24))


def test_quantum_intersection_input_checks():
    with pytest.raises(PreconditionError):
        quantum_intersection((), 0, 1)
    with pytest.raises(PreconditionError):
        quantum_intersection((3,), 0, 1)


def test_loaded_density_extends_the_family():
    densities = dict(builtin_densities())
    densities[0] = load_density(['1/2 * u0^2'])
    # k < 0 for <tau0 tau0>_{0,1}
    assert quantum_intersection((0,), 0, 1, densities) == 0


@pytest.mark.slow
@pytest.mark.parametrize('d,g', [((1, 1), 1), ((2, 1), 1)])
def test_quantum_matches_closed_formula_at_l0(d, g):
    assert quantum_intersection(d, 0, g) == purely_quantum((0,) + d, g)


def test_known_zero():
    assert known_zero(CorrelatorKey((0,), 0, 0))
    assert known_zero(CorrelatorKey((1,), 0, 1))
    assert known_zero(CorrelatorKey((5,), 1, 0))
    assert not known_zero(CorrelatorKey((1,), 1, 0))


def test_table_rejects_conflicting_values():
    table = TauCoefficients(1, 2)
    key = CorrelatorKey((1,), 1, 0)
    table.set(key, GaussianRational(Fraction(1, 24)), 'first')
    table.set(key, GaussianRational(Fraction(1, 24)), 'second')
    assert table.sources[key] == 'first'
    with pytest.raises(TableInconsistencyError):
        table.set(key, GaussianRational(0), 'third')
    assert table.lookup(CorrelatorKey((0,), 0, 0)) == 0
    assert table.lookup(CorrelatorKey((0, 0, 0, 1), 0, 0)) is None


def test_small_table():
    table = assemble_tau(1, 2)
    assert table.normalized(CorrelatorKey((1,), 1, 0)) == Fraction(1, 24)
    assert table.normalized(CorrelatorKey((0,), 0, 1)) == Fraction(-1, 24)
    assert table.normalized(CorrelatorKey((1, 0), 0, 1)) == Fraction(-1, 24)
    assert table.constant_term(1, 1) == CONSTANT_TERM[(1, 1)]
    assert table.sources[CorrelatorKey((0, 2), 1, 0)] in ('quantum correlator', 'string equation')


@pytest.mark.slow
def test_genus_two_table():
    table = assemble_tau(2, 2)
    assert table.normalized(CorrelatorKey((1,), 1, 1)) == Fraction(1, 2880)
    assert classical_slice_mismatches(table) == []
    for entry in dilaton_residuals(table):
        assert entry['key'].startswith('<')


@pytest.mark.slow
def test_table_with_three_points():
    table = assemble_tau(1, 3)
    assert table.normalized(CorrelatorKey((0, 0, 0), 0, 0)) == 1
    assert classical_slice_mismatches(table) == []
    for key in table.keys():
        if key.l == 0 and key.n >= 1 + 2 * (key.g == 0):
            assert table.normalized(key) == purely_quantum(key.d, key.g)


@pytest.mark.parametrize('d,g,value', [
    ((0, 0, 0), 0, Fraction(1)),
    ((1,), 1, Fraction(1, 24)),
    ((1, 1), 1, Fraction(1, 24)),
    ((0, 2), 1, Fraction(1, 24)),
    ((0, 0, 0, 1), 0, Fraction(1)),
    ((2,), 1, Fraction(0)),
])
def test_classical_correlator(d, g, value):
    assert classical_correlator(d, g) == value


def test_classical_correlator_needs_string_or_dilaton():
    with pytest.raises(PreconditionError):
        classical_correlator((4,), 2)
