"""Every value in data/golden.yaml against the code that computes it"""

import os

import pytest

from closedform import CorrelatorKey, gjv_hurwitz, purely_quantum
from data_manager import DataManager
from exact_arith import parse_gaussian
from gw import Profile, connected_invariant
from quantization import (CONSTANT_TERM, WindowedPElement, assemble_tau, commutator, hamiltonian_density,
                          load_density, quantum_correlator, quantum_intersection)

GOLDEN_PATH = os.path.join(os.path.dirname(__file__), '..', 'data', 'golden.yaml')
GOLDEN = DataManager().load_golden(GOLDEN_PATH)


def entries(*names):
    return [pytest.param(GOLDEN[name], id=name) for name in names]


@pytest.fixture(scope='module')
def genus_two_table():
    return assemble_tau(2, 2)


def test_every_entry_has_a_source():
    assert GOLDEN
    assert all(entry['source'] for entry in GOLDEN.values())


def test_constant_term():
    entry = GOLDEN['constant_term']
    assert CONSTANT_TERM[(entry['l'], entry['h'])] == parse_gaussian(entry['value'])


@pytest.mark.parametrize('entry', entries('tau0_tau1_genus1', 'tau0_tau2_l1', 'tau0_tau2_l1_h1'))
def test_quantum_intersections(entry):
    d = tuple(entry['d'])
    assert d[0] == 0
    assert quantum_intersection(d[1:], entry['l'], entry['h']) == parse_gaussian(entry['value'])
    if 'raw' in entry:
        assert quantum_correlator(d[1:], entry['l'], entry['h']) == parse_gaussian(entry['raw'])


@pytest.mark.slow
@pytest.mark.parametrize('entry', entries('tau1_genus1', 'tau1_genus2', 'tau0_cubed', 'tau0_genus1'))
def test_table_entries(entry, genus_two_table):
    key = CorrelatorKey(entry['d'], entry['l'], entry['h'])
    if key.n > genus_two_table.max_points:
        table = assemble_tau(0, key.n)
    else:
        table = genus_two_table
    assert table.normalized(key) == parse_gaussian(entry['value'])


@pytest.mark.parametrize('entry', entries('purely_quantum_tau2_genus1', 'purely_quantum_tau1_genus1'))
def test_purely_quantum(entry):
    assert purely_quantum(entry['d'], entry['g']) == parse_gaussian(entry['value'])


@pytest.mark.parametrize('entry', entries('hurwitz_genus1_degree2', 'hurwitz_genus0_three_sheets'))
def test_hurwitz(entry):
    assert gjv_hurwitz(entry['g'], Profile(entry['mu'])) == parse_gaussian(entry['value'])


def test_gw_invariant():
    entry = GOLDEN['gw_one_point_degree1']
    assert connected_invariant(entry['A'], Profile(entry['a']), entry['d']) == parse_gaussian(entry['value'])


@pytest.mark.parametrize('name,d', [('hbar1_density', 1), ('hbar2_density', 2)])
def test_density_texts(name, d):
    assert load_density(GOLDEN[name]['text'].splitlines()) == hamiltonian_density(d)


def test_moyal_commutation():
    entry = GOLDEN['moyal_commutation']
    a = entry['a']
    bracket = commutator(WindowedPElement.p(a, a + 1), WindowedPElement.p(-a, a + 1))
    assert bracket.coefficient((), hbar=1) == parse_gaussian(entry['value'])
