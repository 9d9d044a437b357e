"""
Cross-check suites: each suite instantiates an identity of the toolkit on a
bounded family of instances and records both sides exactly
"""

import itertools
import logging
import sys
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, List, Optional

from tqdm import tqdm

from closedform import (CONVENTION_BOTH, CorrelatorKey, PreconditionError, gjv_hurwitz, hurwitz_oracle,
                        labeling_convention, partitions, purely_quantum, string_image,
                        tau0_generating_identity)
from exact_arith import factorial, format_gaussian
from gw import (InterpolationError, Profile, ProfileError, connected_invariant, degeneration_rhs,
                formula_sides, genus_of, interpolate_P)
from quant_config import QuantConfig, SuiteBounds
from quantization import (WindowedPElement, WindowError, assemble_tau, bracket_targets, builtin_densities,
                          chain_target, classical_slice_mismatches, commutator, commutator_target,
                          dilaton_residuals, hamiltonian_density, iterated_commutator, phi, phi0_tilde,
                          poisson_bracket, positive_chain, quantum_intersection, window_exact,
                          CONSTANT_TERM)
from wedge import LinearForm, WedgeError, WedgeGenerator, WedgeWord, confirm_vacuum_rules, fock_vev, vev
from series import SeriesError, varsigma_product

logger = logging.getLogger(__name__)


def _show(value: Any) -> str:
    if value is None:
        return '-'
    if isinstance(value, bool):
        return str(value)
    try:
        return format_gaussian(value)
    except TypeError:
        return str(value)


class CheckReport:
    """Outcome of one suite: exact comparisons plus informational notes"""

    def __init__(self, suite: str):
        self.suite = suite
        self.entries: List[Dict[str, Any]] = []
        self.informational: List[Dict[str, Any]] = []

    def add(self, description: str, lhs: Any, rhs: Any, passed: Optional[bool] = None):
        if passed is None:
            passed = lhs == rhs
        self.entries.append({'instance': description, 'lhs': _show(lhs), 'rhs': _show(rhs),
                             'passed': bool(passed)})
        if not passed:
            logger.warning(f"[{self.suite}] {description}: {_show(lhs)} != {_show(rhs)}")

    def fail(self, description: str, error: Exception):
        self.entries.append({'instance': description, 'lhs': f"error: {error}", 'rhs': '-',
                             'passed': False})
        logger.error(f"[{self.suite}] {description}: {error}")

    def note(self, description: str, value: Any):
        """Informational line; never affects success"""
        self.informational.append({'instance': description, 'value': _show(value)})

    @property
    def passed(self) -> int:
        return sum(1 for e in self.entries if e['passed'])

    @property
    def failed(self) -> int:
        return len(self.entries) - self.passed

    @property
    def success(self) -> bool:
        return self.failed == 0

    def failures(self) -> List[Dict[str, Any]]:
        return [e for e in self.entries if not e['passed']]

    def summary(self) -> str:
        status = 'PASS' if self.success else 'FAIL'
        return f"{self.suite}: {status} ({self.passed}/{len(self.entries)} passed, {len(self.informational)} notes)"

    def to_dict(self) -> Dict[str, Any]:
        return {
            'suite': self.suite,
            'success': self.success,
            'passed': self.passed,
            'failed': self.failed,
            'entries': self.entries,
            'informational': self.informational,
        }


def _progress(items: Iterable, suite: str, bounds: SuiteBounds) -> Iterable:
    items = list(items)
    disable = not bounds.progress or not sys.stderr.isatty()
    return tqdm(items, desc=suite, disable=disable, leave=False)


# --- suites ------------------------------------------------------------------

def suite_closed_forms(bounds: SuiteBounds) -> CheckReport:
    """Closed forms for the connected and disconnected one-part series vs the wedge pipeline"""
    report = CheckReport('closed-forms')
    cap = min(bounds.cap, 8)
    instances = [(k, n, connected)
                 for k in range(1, min(bounds.max_parts, 3) + 1)
                 for n in range(1, min(bounds.max_points, 3) + 1)
                 for connected in (True, False)]
    for k, n, connected in _progress(instances, report.suite, bounds):
        label = f"k={k} n={n} cap={cap} {'connected' if connected else 'disconnected'}"
        try:
            lhs, closed = formula_sides(k, n, cap, bounds.eval_budget, connected)
            report.add(label, lhs, closed, lhs.agrees_with(closed))
        except (InterpolationError, ProfileError, WedgeError) as e:
            report.fail(label, e)
    return report


def _small_degree_tuples(max_points: int, entries=(1, 2)):
    for n in range(1, max_points + 1):
        for d in itertools.combinations_with_replacement(entries, n):
            yield tuple(sorted(d, reverse=True))


def suite_gw_bridge(bounds: SuiteBounds) -> CheckReport:
    """<tau_0 tau_d>_{0,g} from the quantum chain vs the relative GW polynomial and the closed formula"""
    report = CheckReport('gw-bridge')
    densities = builtin_densities()
    instances = []
    for d in _small_degree_tuples(min(bounds.max_points, 3)):
        n = len(d)
        for g in range(bounds.max_genus + 1):
            k = sum(d) - 2 * g + 1
            if k < 0 or k > 2 * g + n - 1 or (k == 0 and n > 1):
                continue
            if 2 * g - 2 + n + 1 <= 0:
                continue
            instances.append((d, g, k))
    for d, g, k in _progress(instances, report.suite, bounds):
        label = f"<tau0 {' '.join(f'tau{x}' for x in d)}>_(0,{g}) k={k}"
        try:
            quantum = quantum_intersection(d, 0, g, densities, bounds.eval_budget)
            closed = purely_quantum((0,) + d, g)
            report.add(f"{label} quantum vs closed formula", quantum, closed)
            if k >= 1:
                poly = interpolate_P(g, d, k, bounds.eval_budget)
                report.add(f"{label} quantum vs GW polynomial", quantum,
                           poly.multilinear_coef() / factorial(k))
                report.add(f"{label} degree <= 2g+n-1", poly.total_degree(), 2 * g + len(d) - 1,
                           poly.total_degree() <= 2 * g + len(d) - 1)
                report.add(f"{label} parity n-1", poly.is_parity(len(d) - 1), True)
        except (InterpolationError, PreconditionError, WindowError, ProfileError) as e:
            report.fail(label, e)
    return report


def suite_hurwitz(bounds: SuiteBounds) -> CheckReport:
    """One-part double Hurwitz numbers: closed formula vs symmetric-group counts"""
    report = CheckReport('hurwitz')
    degree = bounds.hurwitz_degree
    convention = labeling_convention(max_degree=min(degree, 5), max_genus=min(bounds.max_genus, 1))
    report.note('labeling conventions fitting the closed formula', ', '.join(convention['fitting']))
    report.add('labeling convention pinned', convention['convention'], CONVENTION_BOTH)
    instances = [(g, d, mu) for g in range(min(bounds.max_genus, 2) + 1)
                 for d in range(1, degree + 1) for mu in partitions(d)]
    for g, d, mu in _progress(instances, report.suite, bounds):
        label = f"H^{g}_(({d}), {mu})"
        try:
            report.add(label, gjv_hurwitz(g, Profile(mu)),
                       hurwitz_oracle(g, Profile([d]), Profile(mu), max_degree=degree))
        except PreconditionError as e:
            report.fail(label, e)
    return report


def _oracle_words(bounds: SuiteBounds) -> List[WedgeWord]:
    energy = bounds.energy
    words = []
    for length in range(1, bounds.word_length + 1):
        slots = []
        for j in range(1, length + 1):
            z = LinearForm.var(f"z{j}")
            options = [WedgeGenerator.alpha(k) for k in range(-energy, energy + 1) if k]
            options.append(WedgeGenerator.e(0, z))
            options += [WedgeGenerator.e(r, z) for r in range(-energy, energy + 1) if r]
            slots.append(options)
        for gens in itertools.product(*slots):
            if sum(g.energy for g in gens) == 0:
                words.append(WedgeWord(gens))
    return words


def suite_wedge_oracle(bounds: SuiteBounds) -> CheckReport:
    """Normal-ordering vev vs literal Fock-space action, plus commutation relations"""
    report = CheckReport('wedge-oracle')
    cap = min(bounds.cap, 8)
    rules = confirm_vacuum_rules(bounds.energy, cap)
    for name, ok in rules['checks']:
        report.add(name, ok, True)
    for word in _progress(_oracle_words(bounds), report.suite, bounds):
        variables = tuple(f"z{j}" for j in range(1, len(word) + 1))
        cutoff = 2 * sum(abs(g.energy) for g in word) + 2
        try:
            symbolic = vev(word, variables, cap)
            literal = fock_vev(word, variables, cap, cutoff)
            report.add(f"<{word}>", symbolic, literal, symbolic.agrees_with(literal))
        except (WedgeError, SeriesError) as e:
            report.fail(f"<{word}>", e)
    _commutation_checks(report, bounds, cap)
    return report


def _commutation_checks(report: CheckReport, bounds: SuiteBounds, cap: int):
    """<x y W> - <y x W> = <[x, y] W> with W restoring zero total energy"""
    variables = ('z1', 'z2')
    z1, z2 = LinearForm.var('z1'), LinearForm.var('z2')
    energy = bounds.energy
    for a in range(1, energy + 1):
        lhs = (fock_vev(WedgeWord([WedgeGenerator.alpha(a), WedgeGenerator.alpha(-a)]), variables, cap, 2 * a + 2)
               - fock_vev(WedgeWord([WedgeGenerator.alpha(-a), WedgeGenerator.alpha(a)]), variables, cap, 2 * a + 2))
        report.add(f"[a{a}, a{-a}] = {a}", lhs.coef((0, 0)), a, lhs.coef((0, 0)) == a)
    for a, b in itertools.product(range(-energy, energy + 1), repeat=2):
        s = a + b
        if s == 0:
            continue
        x, y = WedgeGenerator.e(a, z1), WedgeGenerator.e(b, z2)
        closing = [WedgeGenerator.alpha(-s)]
        cutoff = 2 * (abs(a) + abs(b) + abs(s)) + 2

        def sandwich(gens):
            return WedgeWord(gens + closing) if s > 0 else WedgeWord(closing + gens)

        lhs = (fock_vev(sandwich([x, y]), variables, cap, cutoff)
               - fock_vev(sandwich([y, x]), variables, cap, cutoff))
        det = z2.scale(a) - z1.scale(b)
        merged = WedgeGenerator.e(s, z1 + z2)
        rhs = (varsigma_product([det.coeffs], [], variables, cap)
               * fock_vev(sandwich([merged]), variables, cap, cutoff))
        report.add(f"[E{a}(z1), E{b}(z2)] against a{-s}", lhs, rhs, lhs.agrees_with(rhs))


def suite_moyal(bounds: SuiteBounds) -> CheckReport:
    """[Hbar_1, Hbar_2] = 0 on every small target, and the positive chain against
    iterated commutators at two windows"""
    report = CheckReport('moyal')
    window = bounds.window
    step = QuantConfig.STABILITY_STEP
    h1, h2 = hamiltonian_density(1), hamiltonian_density(2)

    def in_range(key):
        return key[0] <= QuantConfig.MOYAL_MAX_EPS and key[1] <= QuantConfig.MOYAL_MAX_HBAR

    nonzero = {}
    targets = list(bracket_targets(h1, h2, window))
    for target in _progress(targets, report.suite, bounds):
        for key, value in commutator_target(h1, h2, target).items():
            if in_range(key):
                nonzero[(key, target)] = value
    report.add(f"[Hbar1, Hbar2] on {len(targets)} targets with |a| <= {window}", len(nonzero), 0)

    windowed = commutator(phi0_tilde(h1, 3), phi0_tilde(h2, 3)).restrict(
        lambda key: in_range(key) and window_exact(key[2], 3))
    direct = {}
    for target in bracket_targets(h1, h2, 3):
        if window_exact(target, 3):
            for (eps, hbar), value in commutator_target(h1, h2, target).items():
                if in_range((eps, hbar)):
                    direct[(eps, hbar, target)] = value
    report.add("window-free bracket coefficients agree with M=3", len(direct), len(windowed.terms),
               direct == windowed.terms)

    # hbar-free f, g: the hbar^1 part of [f, g] is hbar {f, g}
    f = phi(h1.part(hbar=0), 3)
    g = phi(h2.part(hbar=0), 3)
    quantum = commutator(f, g).restrict(lambda key: key[1] == 1)
    classical = poisson_bracket(f, g)
    lifted = WindowedPElement(classical.window, {(e, h + 1, x): c for (e, h, x), c in classical.terms.items()})
    report.add("hbar^1 part of [f, g] equals the Poisson bracket", quantum, lifted, quantum == lifted)

    densities = builtin_densities()
    commutators: Dict[tuple, WindowedPElement] = {}

    def restricted(d, l, h, mode, size):
        if (d, size) not in commutators:
            commutators[(d, size)] = iterated_commutator(d, size, densities)
        return chain_target(commutators[(d, size)], len(d), l, h, mode)

    grid = [(d, l, h, mode)
            for n in range(1, min(bounds.max_points, 2) + 1)
            for d in itertools.product((1, 2), repeat=n)
            for l in (0, 1)
            for h in range(min(bounds.max_genus, 2) + 1)
            for mode in range(1, 4)]
    for d, l, h, mode in _progress(grid, report.suite, bounds):
        label = f"positive chain d={d} l={l} h={h} A={mode}"
        try:
            chain = positive_chain(d, l, h, mode, mode, densities)
            at_mode = restricted(d, l, h, mode, mode)
            wider = restricted(d, l, h, mode, mode + step)
            report.add(f"{label} vs commutator at M={mode}", chain, at_mode,
                       chain.terms == at_mode.terms)
            report.add(f"{label} vs commutator at M={mode + step}", chain, wider,
                       chain.terms == wider.terms)
        except WindowError as e:
            report.fail(label, e)
    return report


def suite_degeneration(bounds: SuiteBounds) -> CheckReport:
    """Connected degeneration identity at l = 0 on small one-part instances"""
    report = CheckReport('degeneration')
    instances = []
    for k in range(1, min(bounds.max_parts, 2) + 1):
        for a in itertools.product((1, 2), repeat=k):
            for degrees in itertools.product(range(3), repeat=2):
                g = genus_of(1, k, degrees)
                if g is not None and g <= bounds.max_genus:
                    instances.append((sum(a), a, degrees))
    for A, a, degrees in _progress(instances, report.suite, bounds):
        label = f"<{A}, tau{degrees}, {a}>°"
        try:
            report.add(label, connected_invariant(A, Profile(a), degrees),
                       degeneration_rhs(A, Profile(a), degrees))
        except (ProfileError, InterpolationError, WedgeError) as e:
            report.fail(label, e)
    return report


def suite_string(bounds: SuiteBounds) -> CheckReport:
    """String equation on the closed formula and the tau_0 generating identity"""
    report = CheckReport('string')
    for g in range(bounds.max_genus + 1):
        for n in range(0, bounds.max_points + 1):
            top = 4 * g - 2 + n
            for size in range(top % 2, top + 1, 2):
                for d in _sorted_tuples(size, n):
                    try:
                        value = purely_quantum((0,) + d, g)
                    except PreconditionError:
                        continue
                    report.add(f"<tau0 tau{d}>_(0,{g})", value, string_image(d, g))
    for n in range(2, bounds.max_points + 2):
        result = tau0_generating_identity(n, bounds.max_genus)
        report.add(f"tau0 generating identity n={n}", len(result['mismatches']), 0, result['success'])
    return report


def _sorted_tuples(total: int, parts: int):
    if parts == 0:
        if total == 0:
            yield ()
        return
    for d in itertools.combinations_with_replacement(range(total + 1), parts):
        if sum(d) == total:
            yield d


def suite_quantum_table(bounds: SuiteBounds) -> CheckReport:
    """Assembled F^(q) coefficients: special values, closed formula at l = 0, classical slice, dilaton"""
    report = CheckReport('quantum-table')
    max_genus = min(bounds.max_genus, 2)
    table = assemble_tau(max_genus, bounds.max_points, budget=bounds.eval_budget)
    report.note('table entries', len(table))
    report.add('constant term at eps^2 hbar', table.constant_term(1, 1), CONSTANT_TERM[(1, 1)])
    specials = [(CorrelatorKey((1,), 1, 0), Fraction(1, 24)), (CorrelatorKey((0, 0, 0), 0, 0), Fraction(1)),
                (CorrelatorKey((0,), 0, 1), Fraction(-1, 24)), (CorrelatorKey((0, 1), 0, 1), Fraction(-1, 24))]
    if max_genus >= 2:
        specials.append((CorrelatorKey((1,), 1, 1), Fraction(1, 2880)))
    for key, expected in specials:
        report.add(str(key), table.normalized(key), expected)
    for key in table.keys():
        if key.l:
            continue
        try:
            closed = purely_quantum(key.d, key.g)
        except PreconditionError:
            continue
        report.add(f"{key} vs closed formula", table.normalized(key), closed)
    for mismatch in classical_slice_mismatches(table):
        report.add(f"{mismatch['key']} vs classical", mismatch['table'], mismatch['classical'], False)
    for residual in dilaton_residuals(table):
        report.note(f"dilaton residual {residual['key']}", residual['residual'])
    return report


SUITES: Dict[str, Callable[[SuiteBounds], CheckReport]] = {
    'closed-forms': suite_closed_forms,
    'gw-bridge': suite_gw_bridge,
    'hurwitz': suite_hurwitz,
    'wedge-oracle': suite_wedge_oracle,
    'moyal': suite_moyal,
    'degeneration': suite_degeneration,
    'string': suite_string,
    'quantum-table': suite_quantum_table,
}


def run_suites(names: List[str], bounds: Optional[SuiteBounds] = None) -> List[CheckReport]:
    """Run suites in the given order ('all' expands to every suite)"""
    bounds = bounds or QuantConfig.bounds()
    if not names:
        raise ValueError("No suite selected")
    if 'all' in names:
        names = list(QuantConfig.SUITES)
    names = [QuantConfig.suite_name(name) for name in names]
    unknown = [name for name in names if name not in SUITES]
    if unknown:
        raise ValueError(f"Unknown suites: {unknown}")
    reports = []
    for name in names:
        logger.info(f"Running suite {name}")
        report = SUITES[name](bounds)
        logger.info(report.summary())
        reports.append(report)
    return reports
