from fractions import Fraction

import pytest

from crosscheck import SUITES, CheckReport, _oracle_words, run_suites, suite_hurwitz, suite_string
from quant_config import QuantConfig, SuiteBounds


@pytest.fixture
def small_bounds():
    return SuiteBounds(max_genus=1, max_points=2, max_parts=1, cap=4, window=4, hurwitz_degree=3,
                       word_length=2, energy=1, progress=False)


def test_report_bookkeeping():
    report = CheckReport('demo')
    report.add('equal', Fraction(1, 24), Fraction(1, 24))
    report.add('different', Fraction(1, 24), Fraction(1, 12))
    report.add('explicit', 'lhs', 'rhs', passed=True)
    report.fail('broken', RuntimeError('boom'))
    report.note('info', 3)
    assert report.passed == 2
    assert report.failed == 2
    assert not report.success
    assert [entry['instance'] for entry in report.failures()] == ['different', 'broken']
    assert report.summary() == 'demo: FAIL (2/4 passed, 1 notes)'
    payload = report.to_dict()
    assert payload['entries'][1] == {'instance': 'different', 'lhs': '1/24', 'rhs': '1/12', 'passed': False}
    assert payload['informational'] == [{'instance': 'info', 'value': '3'}]


def test_every_configured_suite_is_registered():
    assert list(SUITES) == QuantConfig.SUITES


def test_run_suites_rejects_bad_names(small_bounds):
    with pytest.raises(ValueError):
        run_suites([], small_bounds)
    with pytest.raises(ValueError):
        run_suites(['hurwitz', 'nope'], small_bounds)


def test_hurwitz_suite(small_bounds):
    report = suite_hurwitz(small_bounds)
    assert report.success, report.failures()
    assert report.passed > 1
    assert report.informational


def test_string_suite(small_bounds):
    report = suite_string(small_bounds)
    assert report.success, report.failures()


def test_run_suites_keeps_order(small_bounds):
    reports = run_suites(['string', 'hurwitz'], small_bounds)
    assert [report.suite for report in reports] == ['string', 'hurwitz']


def test_run_suites_resolves_aliases(small_bounds, monkeypatch):
    monkeypatch.setitem(SUITES, 'closed-forms', lambda bounds: CheckReport('closed-forms'))
    monkeypatch.setitem(SUITES, 'gw-bridge', lambda bounds: CheckReport('gw-bridge'))
    reports = run_suites(['formula2', 'theorem1-l0'], small_bounds)
    assert [report.suite for report in reports] == ['closed-forms', 'gw-bridge']


def test_oracle_words_include_charged_e():
    words = _oracle_words(SuiteBounds(word_length=3, energy=1, progress=False))
    charged = [word for word in words if any(not g.is_alpha and g.energy for g in word)]
    assert any(len(word) == 3 for word in charged)
    assert 'E1(z1) E-1(z2) E0(z3)' in {str(word) for word in charged}
    assert all(word.energy == 0 for word in words)


@pytest.mark.slow
@pytest.mark.parametrize('name', ['closed-forms', 'gw-bridge', 'wedge-oracle', 'moyal', 'degeneration',
                                  'quantum-table'])
def test_suite_passes_at_small_bounds(name, small_bounds):
    report = SUITES[name](small_bounds)
    assert report.success, report.failures()
