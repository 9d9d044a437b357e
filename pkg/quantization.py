"""
Quantum KdV machinery: differential polynomials, the Fourier map to the
p-variable algebra, Moyal and tilde-star products, and the quantum
intersection numbers built from the quantum Hamiltonians
"""

import itertools
import logging
import re
from collections import Counter
from fractions import Fraction
from functools import lru_cache
from math import prod
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from closedform import CorrelatorKey, PreconditionError
from exact_arith import (I, ONE, ZERO, GaussianRational, ParseError, as_gaussian, factorial,
                         falling_factorial, format_gaussian, ipow, parse_gaussian)
from gw import InterpolationError, multilinear_value

logger = logging.getLogger(__name__)

DEFAULT_WINDOW_MARGIN = 4
DEFAULT_EVAL_BUDGET = 400


class DensityFormatError(ValueError):
    """Raised for malformed Hamiltonian density text"""


class WindowError(ValueError):
    """Raised when elements live in different windows or a window is too small"""


class NormalizationError(ArithmeticError):
    """Raised when a normalized quantum intersection number is not real"""


class TableInconsistencyError(RuntimeError):
    """Raised when two derivations of the same table entry disagree"""


# --- differential polynomials ------------------------------------------------

# (eps power, hbar power, exponents of u0, u1, ... without trailing zeros)
DiffKey = Tuple[int, int, Tuple[int, ...]]


def _trim(exps: Sequence[int]) -> Tuple[int, ...]:
    exps = list(exps)
    while exps and not exps[-1]:
        exps.pop()
    return tuple(exps)


class DiffPoly:
    """Polynomial in u0, u1, ..., eps, hbar with Gaussian rational coefficients"""

    __slots__ = ('terms',)

    def __init__(self, terms: Optional[Dict[DiffKey, object]] = None):
        clean: Dict[DiffKey, GaussianRational] = {}
        for (eps, hbar, exps), coef in (terms or {}).items():
            key = (eps, hbar, _trim(exps))
            coef = as_gaussian(coef)
            if coef:
                clean[key] = clean[key] + coef if key in clean else coef
        self.terms = {k: c for k, c in clean.items() if c}

    @classmethod
    def monomial(cls, coef, exps: Sequence[int] = (), eps: int = 0, hbar: int = 0) -> "DiffPoly":
        return cls({(eps, hbar, tuple(exps)): coef})

    @classmethod
    def u(cls, index: int) -> "DiffPoly":
        return cls.monomial(1, (0,) * index + (1,))

    @classmethod
    def constant(cls, value) -> "DiffPoly":
        return cls.monomial(value)

    def is_zero(self) -> bool:
        return not self.terms

    def max_index(self) -> int:
        """Largest i with u_i present, -1 if none"""
        return max((len(exps) - 1 for _, _, exps in self.terms), default=-1)

    def differential_degrees(self) -> set:
        """deg u_i = i, deg eps = -1"""
        return {sum(i * e for i, e in enumerate(exps)) - eps for eps, _, exps in self.terms}

    def part(self, eps: Optional[int] = None, hbar: Optional[int] = None) -> "DiffPoly":
        return DiffPoly({k: c for k, c in self.terms.items()
                         if (eps is None or k[0] == eps) and (hbar is None or k[1] == hbar)})

    def constant_part(self, eps: int, hbar: int) -> GaussianRational:
        """p-free (u-free) coefficient of eps^eps hbar^hbar"""
        return self.terms.get((eps, hbar, ()), ZERO)

    def __add__(self, other):
        if not isinstance(other, DiffPoly):
            other = DiffPoly.constant(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out[k] + c if k in out else c
        return DiffPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return DiffPoly({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, factor) -> "DiffPoly":
        factor = as_gaussian(factor)
        return DiffPoly({k: c * factor for k, c in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, DiffPoly):
            return self.scale(other)
        out: Dict[DiffKey, GaussianRational] = {}
        for (e1, h1, x1), c1 in self.terms.items():
            for (e2, h2, x2), c2 in other.terms.items():
                width = max(len(x1), len(x2))
                exps = tuple((x1[i] if i < len(x1) else 0) + (x2[i] if i < len(x2) else 0)
                             for i in range(width))
                key = (e1 + e2, h1 + h2, exps)
                out[key] = out[key] + c1 * c2 if key in out else c1 * c2
        return DiffPoly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "DiffPoly":
        result = DiffPoly.constant(ONE)
        for _ in range(n):
            result = result * self
        return result

    def partial(self, index: int) -> "DiffPoly":
        """d/du_index"""
        out = {}
        for (eps, hbar, exps), coef in self.terms.items():
            if index < len(exps) and exps[index]:
                lowered = list(exps)
                lowered[index] -= 1
                out[(eps, hbar, tuple(lowered))] = coef * exps[index]
        return DiffPoly(out)

    def __eq__(self, other):
        return isinstance(other, DiffPoly) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __str__(self):
        return format_density(self) or '0'

    def __repr__(self):
        return f"DiffPoly({self})"


def dx(f: DiffPoly) -> DiffPoly:
    """sum_d u_(d+1) d f / d u_d"""
    total = DiffPoly()
    for index in range(f.max_index() + 1):
        total = total + f.partial(index) * DiffPoly.u(index + 1)
    return total


def var_deriv(f: DiffPoly) -> DiffPoly:
    """delta f / delta u = sum_i (-dx)^i d f / d u_i"""
    total = DiffPoly()
    for index in range(f.max_index() + 1):
        term = f.partial(index)
        for _ in range(index):
            term = -dx(term)
        total = total + term
    return total


def _hbar_density(d: int) -> DiffPoly:
    u = DiffPoly.u
    i_hbar = DiffPoly.monomial(I, hbar=1)
    eps2 = DiffPoly.monomial(1, eps=2)
    if d == 1:
        return (u(0) ** 3 * Fraction(1, 6)
                + eps2 * u(0) * u(2) * Fraction(1, 24)
                - i_hbar * u(0) * Fraction(1, 24))
    if d == 2:
        eps4 = DiffPoly.monomial(1, eps=4)
        return (u(0) ** 4 * Fraction(1, 24)
                + eps2 * u(0) ** 2 * u(2) * Fraction(1, 48)
                + eps4 * u(0) * u(4) * Fraction(1, 480)
                - i_hbar * (u(0) * u(2) * 2 + u(0) ** 2) * Fraction(1, 48)
                - i_hbar * eps2 * u(0) * Fraction(1, 2880))
    raise PreconditionError(f"No built-in density for d={d}; load one from a density file")


def hamiltonian_density(d: int) -> DiffPoly:
    """Density of the quantum Hamiltonian Hbar_d for d in {1, 2}"""
    return _hbar_density(d)


def builtin_densities() -> Dict[int, DiffPoly]:
    return {1: hamiltonian_density(1), 2: hamiltonian_density(2)}


# Density text: one monomial per line, COEFF * eps^A * hbar^B * u0^E0 u1^E1 ...
_STAR = re.compile(r'\s+\*\s+')
_POWER = re.compile(r'^(eps|hbar|u(\d+))(?:\^(\d+))?$')


def _parse_density_line(line: str, lineno: int) -> DiffPoly:
    pieces = _STAR.split(line.strip())
    try:
        coef = parse_gaussian(pieces[0])
    except ParseError as e:
        raise DensityFormatError(f"line {lineno}: bad coefficient {pieces[0]!r} ({e})")
    eps = hbar = 0
    exps: Dict[int, int] = {}
    for piece in pieces[1:]:
        for token in piece.split():
            match = _POWER.match(token)
            if not match:
                raise DensityFormatError(f"line {lineno}: unexpected factor {token!r}")
            power = int(match.group(3)) if match.group(3) else 1
            if match.group(1) == 'eps':
                eps += power
            elif match.group(1) == 'hbar':
                hbar += power
            else:
                index = int(match.group(2))
                exps[index] = exps.get(index, 0) + power
    width = max(exps) + 1 if exps else 0
    return DiffPoly.monomial(coef, tuple(exps.get(i, 0) for i in range(width)), eps, hbar)


def load_density(lines: Iterable[str]) -> DiffPoly:
    """Parse density text (an open file or a list of lines)"""
    total = DiffPoly()
    seen = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        total = total + _parse_density_line(line, lineno)
        seen = True
    if not seen:
        raise DensityFormatError("density text has no monomials")
    return total


def format_density(f: DiffPoly) -> str:
    """Inverse of load_density, one monomial per line in a fixed order"""
    lines = []
    for (eps, hbar, exps), coef in sorted(f.terms.items(), key=lambda item: (item[0][0], item[0][1],
                                                                               len(item[0][2]), item[0][2])):
        pieces = [format_gaussian(coef)]
        if eps:
            pieces.append(f"eps^{eps}")
        if hbar:
            pieces.append(f"hbar^{hbar}")
        mono = ' '.join(f"u{i}^{e}" for i, e in enumerate(exps) if e)
        if mono:
            pieces.append(mono)
        lines.append(' * '.join(pieces))
    return '\n'.join(lines)


# --- the p-variable algebra ---------------------------------------------------

# (eps power, hbar power, sorted p-indices); the Fourier mode is the index sum
PKey = Tuple[int, int, Tuple[int, ...]]


class WindowedPElement:
    """Polynomial in p_a (|a| <= window), eps and hbar; each monomial carries e^{i A x}
    with A its index sum"""

    __slots__ = ('window', 'terms')

    def __init__(self, window: int, terms: Optional[Dict[PKey, object]] = None):
        if window < 1:
            raise WindowError(f"Window must be positive, got {window}")
        self.window = window
        clean: Dict[PKey, GaussianRational] = {}
        for (eps, hbar, indices), coef in (terms or {}).items():
            indices = tuple(sorted(indices))
            if any(abs(a) > window for a in indices):
                raise WindowError(f"Index outside window {window}: {indices}")
            coef = as_gaussian(coef)
            key = (eps, hbar, indices)
            if coef:
                clean[key] = clean[key] + coef if key in clean else coef
        self.terms = {k: c for k, c in clean.items() if c}

    @classmethod
    def p(cls, index: int, window: int) -> "WindowedPElement":
        return cls(window, {(0, 0, (index,)): 1})

    @classmethod
    def constant(cls, value, window: int) -> "WindowedPElement":
        return cls(window, {(0, 0, ()): value})

    def _check(self, other: "WindowedPElement"):
        if self.window != other.window:
            raise WindowError(f"Window mismatch: {self.window} vs {other.window}")

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, indices: Sequence[int], eps: int = 0, hbar: int = 0) -> GaussianRational:
        return self.terms.get((eps, hbar, tuple(sorted(indices))), ZERO)

    def modes(self) -> set:
        return {sum(indices) for _, _, indices in self.terms}

    def restrict(self, predicate: Callable[[PKey], bool]) -> "WindowedPElement":
        return WindowedPElement(self.window, {k: c for k, c in self.terms.items() if predicate(k)})

    def mode_part(self, mode: int) -> "WindowedPElement":
        return self.restrict(lambda key: sum(key[2]) == mode)

    def positive_part(self) -> "WindowedPElement":
        """Set p_a = 0 for a <= 0"""
        return self.restrict(lambda key: all(a > 0 for a in key[2]))

    def truncate(self, max_eps: int, max_hbar: int) -> "WindowedPElement":
        return self.restrict(lambda key: key[0] <= max_eps and key[1] <= max_hbar)

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out[k] + c if k in out else c
        return WindowedPElement(self.window, out)

    def __neg__(self):
        return WindowedPElement(self.window, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, factor) -> "WindowedPElement":
        factor = as_gaussian(factor)
        return WindowedPElement(self.window, {k: c * factor for k, c in self.terms.items()})

    def __mul__(self, other):
        """Commutative product"""
        if not isinstance(other, WindowedPElement):
            return self.scale(other)
        self._check(other)
        out: Dict[PKey, GaussianRational] = {}
        for (e1, h1, x1), c1 in self.terms.items():
            for (e2, h2, x2), c2 in other.terms.items():
                key = (e1 + e2, h1 + h2, tuple(sorted(x1 + x2)))
                out[key] = out[key] + c1 * c2 if key in out else c1 * c2
        return WindowedPElement(self.window, out)

    def __eq__(self, other):
        return (isinstance(other, WindowedPElement) and self.window == other.window
                and self.terms == other.terms)

    def __hash__(self):
        return hash((self.window, frozenset(self.terms.items())))

    def __str__(self):
        if not self.terms:
            return '0'
        parts = []
        for (eps, hbar, indices), coef in sorted(self.terms.items()):
            factors = [f"({format_gaussian(coef)})"]
            if eps:
                factors.append(f"eps^{eps}")
            if hbar:
                factors.append(f"hbar^{hbar}")
            factors.extend(f"p[{a}]" for a in indices)
            parts.append('*'.join(factors))
        return ' + '.join(parts)

    def __repr__(self):
        return f"WindowedPElement(M={self.window}, {self})"


def _expand_slots(exps: Sequence[int]) -> Tuple[int, ...]:
    """u0^2 u2 -> (0, 0, 2)"""
    return tuple(i for i, e in enumerate(exps) for _ in range(e))


@lru_cache(maxsize=65536)
def phi_monomial_coefficient(slots: Tuple[int, ...], indices: Tuple[int, ...]) -> GaussianRational:
    """Coefficient of p_indices in phi(prod_j u_(slots_j)), a sum over assignments"""
    if len(slots) != len(indices):
        return ZERO
    total = ZERO
    for arrangement in set(itertools.permutations(indices)):
        term = ONE
        for d, a in zip(slots, arrangement):
            if d:
                if not a:
                    term = ZERO
                    break
                term = term * (ipow(d) * a ** d)
        total = total + term
    return total


def phi(f: DiffPoly, window: int) -> WindowedPElement:
    """u_d -> sum_{|a| <= M} (i a)^d p_a e^{i a x}"""
    if window < 1:
        raise WindowError(f"Window must be positive, got {window}")
    out: Dict[PKey, GaussianRational] = {}
    for (eps, hbar, exps), coef in f.terms.items():
        slots = _expand_slots(exps)
        for indices in itertools.combinations_with_replacement(range(-window, window + 1), len(slots)):
            value = phi_monomial_coefficient(slots, indices)
            if value:
                key = (eps, hbar, indices)
                out[key] = out[key] + coef * value if key in out else coef * value
    return WindowedPElement(window, out)


def phi0_tilde(f: DiffPoly, window: int) -> WindowedPElement:
    """Mode-0 part of phi(f) minus its p-free constant"""
    return phi(f, window).restrict(lambda key: sum(key[2]) == 0 and bool(key[2]))


def _contractions(left: Counter, right: Counter):
    """Choices {k: c_k} of c_k pairs (p_k on the left, p_-k on the right), k > 0"""
    options = []
    for k, count in left.items():
        if k > 0 and right.get(-k):
            options.append([(k, c) for c in range(min(count, right[-k]) + 1)])
    for choice in itertools.product(*options):
        yield {k: c for k, c in choice if c}


def _star(f: WindowedPElement, h: WindowedPElement, tilde: bool) -> WindowedPElement:
    f._check(h)
    out: Dict[PKey, GaussianRational] = {}
    for (e1, h1, x1), c1 in f.terms.items():
        left = Counter(x1)
        for (e2, h2, x2), c2 in h.terms.items():
            right = Counter(x2)
            for choice in _contractions(left, right):
                if tilde and not choice:
                    continue
                weight = c1 * c2
                order = 0
                rest_left = Counter(left)
                rest_right = Counter(right)
                for k, c in choice.items():
                    weight = weight * (ipow(c) * Fraction(k ** c * falling_factorial(left[k], c)
                                                          * falling_factorial(right[-k], c), factorial(c)))
                    order += c
                    rest_left[k] -= c
                    rest_right[-k] -= c
                indices = tuple(sorted((rest_left + rest_right).elements()))
                key = (e1 + e2, h1 + h2 + order, indices)
                out[key] = out[key] + weight if key in out else weight
    return WindowedPElement(f.window, out)


def moyal_star(f: WindowedPElement, h: WindowedPElement) -> WindowedPElement:
    """exp(sum_{k>0} i hbar k d/dp_k (x) d/dq_-k) (f(p) h(q)) at q = p"""
    return _star(f, h, tilde=False)


def tilde_star(f: WindowedPElement, h: WindowedPElement) -> WindowedPElement:
    """f * h - f h"""
    return _star(f, h, tilde=True)


def commutator(f: WindowedPElement, h: WindowedPElement) -> WindowedPElement:
    return moyal_star(f, h) - moyal_star(h, f)


def poisson_bracket(f: WindowedPElement, h: WindowedPElement) -> WindowedPElement:
    """sum_a i a df/dp_a dh/dp_-a"""
    f._check(h)
    out: Dict[PKey, GaussianRational] = {}
    for (e1, h1, x1), c1 in f.terms.items():
        left = Counter(x1)
        for (e2, h2, x2), c2 in h.terms.items():
            right = Counter(x2)
            for a, count in left.items():
                if not a or not right.get(-a):
                    continue
                weight = c1 * c2 * I * (a * count * right[-a])
                rest_left = Counter(left)
                rest_right = Counter(right)
                rest_left[a] -= 1
                rest_right[-a] -= 1
                key = (e1 + e2, h1 + h2, tuple(sorted((rest_left + rest_right).elements())))
                out[key] = out[key] + weight if key in out else weight
    return WindowedPElement(f.window, out)


def window_exact(indices: Sequence[int], window: int) -> bool:
    """Whether a target monomial's coefficient in a product of mode-0 elements
    cannot see the window cutoff"""
    return sum(abs(a) for a in indices) <= window


def default_window(mode: int, indices: Sequence[int], margin: int = DEFAULT_WINDOW_MARGIN) -> int:
    return abs(mode) + sum(abs(a) for a in indices) + margin


def iterated_commutator(d: Sequence[int], window: int,
                        densities: Optional[Dict[int, DiffPoly]] = None) -> WindowedPElement:
    """[[...[phi(H_{d1-1}), Hbar_{d2}], ...], Hbar_{dn}] in a window"""
    densities = densities or builtin_densities()
    element = phi(var_deriv(_density(densities, d[0])), window)
    for dj in d[1:]:
        element = commutator(element, phi0_tilde(_density(densities, dj), window))
    return element


def chain_target(element: WindowedPElement, n: int, l: int, h: int, mode: int) -> WindowedPElement:
    """Terms of an n-fold chain that the positive chain reads: eps^(2l) hbar^(h+n-1),
    mode A, positive indices only"""
    return element.restrict(lambda key: key[0] == 2 * l and key[1] == h + n - 1
                            and sum(key[2]) == mode and all(a > 0 for a in key[2]))


# --- window-free target coefficients -----------------------------------------

Orders = Dict[Tuple[int, int], GaussianRational]


def _max_slots(f: DiffPoly) -> int:
    return max((sum(exps) for _, _, exps in f.terms), default=0)


def _phi0_coefficients(f: DiffPoly, indices: Tuple[int, ...]) -> Orders:
    """(eps, hbar) -> coefficient of p_indices in phi0~(f) with no window"""
    out: Orders = {}
    if not indices or sum(indices):
        return out
    for (eps, hbar, exps), coef in f.terms.items():
        slots = _expand_slots(exps)
        if len(slots) != len(indices):
            continue
        value = phi_monomial_coefficient(slots, indices)
        if value:
            key = (eps, hbar)
            out[key] = out[key] + coef * value if key in out else coef * value
    return out


def tilde_star_target(f: DiffPoly, h: DiffPoly, target: Sequence[int]) -> Orders:
    """(eps, hbar) -> coefficient of p_target in phi0~(f) ~* phi0~(h), no window cutoff

    A contraction pairs p_k (k > 0) on the left with p_-k on the right, so the
    contracted indices add up to minus the mode of the target part kept from the
    left; only finitely many products reach a given target.
    """
    target = Counter(target)
    left_room, right_room = _max_slots(f), _max_slots(h)
    out: Orders = {}
    for from_left in _sub_multisets(target, include_empty=True):
        from_right = target - Counter(from_left)
        carried = -sum(k * c for k, c in from_left.items())
        if carried < 1:
            continue
        free_left = left_room - sum(from_left.values())
        free_right = right_room - sum(from_right.values())
        for size in range(1, min(carried, free_left, free_right) + 1):
            for parts in _partitions_into(carried, size):
                contracted = Counter(parts)
                left = Counter(from_left) + contracted
                right = from_right + Counter({-k: c for k, c in contracted.items()})
                left_coefs = _phi0_coefficients(f, tuple(sorted(left.elements())))
                if not left_coefs:
                    continue
                right_coefs = _phi0_coefficients(h, tuple(sorted(right.elements())))
                if not right_coefs:
                    continue
                weight = ONE
                for k, c in contracted.items():
                    weight = weight * (ipow(c) * Fraction(k ** c * falling_factorial(left[k], c)
                                                          * falling_factorial(right[-k], c), factorial(c)))
                for (e1, h1), c1 in left_coefs.items():
                    for (e2, h2), c2 in right_coefs.items():
                        key = (e1 + e2, h1 + h2 + size)
                        term = weight * c1 * c2
                        out[key] = out[key] + term if key in out else term
    return {k: c for k, c in out.items() if c}


def commutator_target(f: DiffPoly, h: DiffPoly, target: Sequence[int]) -> Orders:
    """(eps, hbar) -> coefficient of p_target in [phi0~(f), phi0~(h)], no window cutoff"""
    out = dict(tilde_star_target(f, h, target))
    for key, c in tilde_star_target(h, f, target).items():
        out[key] = out[key] - c if key in out else -c
    return {k: c for k, c in out.items() if c}


def bracket_targets(f: DiffPoly, h: DiffPoly, max_index: int):
    """Mode-0 index tuples with |a| <= max_index that [phi0~(f), phi0~(h)] can reach"""
    longest = _max_slots(f) + _max_slots(h) - 2
    for length in range(1, longest + 1):
        for indices in itertools.combinations_with_replacement(range(-max_index, max_index + 1), length):
            if not sum(indices):
                yield indices


# --- positive-index chain and quantum correlators ----------------------------

def _density(densities: Dict[int, DiffPoly], d: int) -> DiffPoly:
    if d not in densities:
        raise PreconditionError(f"No density for Hbar_{d}; supported: {sorted(densities)}")
    return densities[d]


def _partitions_into(total: int, parts: int, largest: Optional[int] = None):
    """Non-increasing tuples of `parts` positive integers summing to total"""
    largest = total if largest is None else largest
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(min(total - parts + 1, largest), 0, -1):
        for rest in _partitions_into(total - first, parts - 1, first):
            yield (first,) + rest


def _sub_multisets(counter: Counter, include_empty: bool = False):
    keys = sorted(counter)
    for counts in itertools.product(*(range(counter[k] + 1) for k in keys)):
        chosen = {k: c for k, c in zip(keys, counts) if c}
        if chosen or include_empty:
            yield chosen


def positive_chain(d: Sequence[int], l: int, h: int, mode: int, window: int,
                   densities: Optional[Dict[int, DiffPoly]] = None) -> WindowedPElement:
    """(...(H_{d1-1} ~* Hbar_{d2}) ~* ...) ~* Hbar_{dn} at p_{<=0} = 0, mode A,
    coefficient of eps^(2l) hbar^(h+n-1)

    Only positive indices survive, so every index stays <= A; any window M >= A
    is exact.
    """
    densities = densities or builtin_densities()
    d = tuple(d)
    n = len(d)
    if mode < 1:
        raise WindowError(f"Positive chain needs a positive mode, got {mode}")
    if window < mode:
        raise WindowError(f"Window {window} is smaller than the mode {mode}")
    eps_target = 2 * l
    hbar_target = h + n - 1
    first = var_deriv(_density(densities, d[0]))
    state: Dict[PKey, GaussianRational] = {}
    for (eps, hbar, exps), coef in first.terms.items():
        if eps > eps_target or hbar > hbar_target:
            continue
        slots = _expand_slots(exps)
        for indices in _partitions_into(mode, len(slots)):
            indices = tuple(sorted(indices))
            value = phi_monomial_coefficient(slots, indices)
            if value:
                key = (eps, hbar, indices)
                state[key] = state[key] + coef * value if key in state else coef * value
    for dj in d[1:]:
        hamiltonian = _density(densities, dj)
        following: Dict[PKey, GaussianRational] = {}
        for (eps, hbar, indices), coef in state.items():
            counter = Counter(indices)
            for chosen in _sub_multisets(counter):
                contracted = sum(chosen.values())
                removed = sum(k * c for k, c in chosen.items())
                # every negative index of the Hamiltonian monomial is contracted
                weight = coef
                for k, c in chosen.items():
                    weight = weight * (ipow(c) * (k ** c * falling_factorial(counter[k], c)))
                remaining = counter - Counter(chosen)
                for (e2, h2, exps), c2 in hamiltonian.terms.items():
                    new_eps = eps + e2
                    new_hbar = hbar + h2 + contracted
                    if new_eps > eps_target or new_hbar > hbar_target:
                        continue
                    slots = _expand_slots(exps)
                    free = len(slots) - contracted
                    if free < 1:
                        continue
                    negatives = tuple(-k for k in sorted(chosen, reverse=True) for _ in range(chosen[k]))
                    for positives in _partitions_into(removed, free):
                        h_indices = tuple(sorted(negatives + positives))
                        value = phi_monomial_coefficient(slots, h_indices)
                        if not value:
                            continue
                        result = tuple(sorted(list(remaining.elements()) + list(positives)))
                        key = (new_eps, new_hbar, result)
                        term = weight * c2 * value
                        following[key] = following[key] + term if key in following else term
        state = {k: c for k, c in following.items() if c}
    return WindowedPElement(window, {k: c for k, c in state.items()
                                     if k[0] == eps_target and k[1] == hbar_target})


def quantum_P(d: Sequence[int], l: int, h: int, parts: Sequence[int],
              densities: Optional[Dict[int, DiffPoly]] = None,
              window_margin: int = DEFAULT_WINDOW_MARGIN) -> GaussianRational:
    """P_{g,l,d}(a) read off the tilde-star chain: i^-(g+l+n-1) * coefficient * prod mult!"""
    parts = tuple(sorted(parts))
    mode = sum(parts)
    n = len(d)
    g = l + h
    window = default_window(mode, parts, window_margin)
    frozen = frozenset((densities or builtin_densities()).items())
    chain = _cached_chain(tuple(d), l, h, mode, window, frozen)
    coefficient = chain.coefficient(parts, 2 * l, h + n - 1)
    multiplicities = prod(factorial(c) for c in Counter(parts).values())
    return coefficient * ipow(-(g + l + n - 1)) * multiplicities


@lru_cache(maxsize=512)
def _cached_chain(d: Tuple[int, ...], l: int, h: int, mode: int, window: int,
                  densities: frozenset) -> WindowedPElement:
    return positive_chain(d, l, h, mode, window, dict(densities))


def clear_chain_cache():
    _cached_chain.cache_clear()


def normalization_exponent(key: CorrelatorKey) -> int:
    """Exponent e in <tau_d>_{l,h} = i^e Coef_{eps^2l hbar^h} of the raw derivative"""
    return sum(key.d) - 3 * key.g - key.n + 3


def normalize(key: CorrelatorKey, raw) -> Fraction:
    value = as_gaussian(raw) * ipow(normalization_exponent(key))
    if not value.is_real():
        raise NormalizationError(f"{key}: normalized value {format_gaussian(value)} is not real")
    return value.re


def quantum_intersection(d: Sequence[int], l: int, h: int,
                         densities: Optional[Dict[int, DiffPoly]] = None,
                         budget: int = DEFAULT_EVAL_BUDGET,
                         window_margin: int = DEFAULT_WINDOW_MARGIN) -> GaussianRational:
    """<tau_0 tau_d1 ... tau_dn>_{l,h} by the k-branches of the GW correspondence"""
    d = tuple(d)
    if not d:
        raise PreconditionError("Need at least one tau index after the implicit tau_0")
    densities = densities or builtin_densities()
    for dj in d:
        _density(densities, dj)
    n = len(d)
    g = l + h
    k = sum(d) - 2 * g + l + 1
    if k < 0 or (k == 0 and n > 1):
        return ZERO
    if k == 0:
        constant = var_deriv(densities[d[0]]).constant_part(2 * l, h)
        return constant * ((-1) ** g) * ipow(-(3 * g + l))
    degree = 2 * g + n - 1
    if k > degree:
        return ZERO

    def evaluate(point):
        return quantum_P(d, l, h, point, densities, window_margin)

    try:
        return multilinear_value(evaluate, k, degree, budget)
    except InterpolationError as e:
        logger.error(f"Interpolation failed for d={d}, l={l}, h={h}: {e}")
        raise


def quantum_correlator(d: Sequence[int], l: int, h: int,
                       densities: Optional[Dict[int, DiffPoly]] = None,
                       budget: int = DEFAULT_EVAL_BUDGET,
                       window_margin: int = DEFAULT_WINDOW_MARGIN) -> GaussianRational:
    """Raw Coef_{eps^2l hbar^h} of d^(n+1) F / dt_0 dt_d1 ... dt_dn at t = 0"""
    value = quantum_intersection(d, l, h, densities, budget, window_margin)
    key = CorrelatorKey((0,) + tuple(d), l, h)
    if not value.is_real():
        raise NormalizationError(f"{key}: value {format_gaussian(value)} is not real")
    return value * ipow(-normalization_exponent(key))


# --- the table of F^(q) coefficients ------------------------------------------

# F^(q) at t = 0 is -(i/5760) eps^2 hbar
CONSTANT_TERM = {(1, 1): GaussianRational(0, Fraction(-1, 5760))}


def known_zero(key: CorrelatorKey) -> bool:
    """Entries forced to vanish: unstable, wrong parity, or above the degree bound"""
    if 2 * key.g - 2 + key.n <= 0:
        return True
    if not key.passes_selection_rule():
        return True
    return sum(key.d) > 4 * key.g - key.l + key.n - 3


class TauCoefficients:
    """Raw coefficients of F^(q) derivatives at t = 0, keyed by sorted CorrelatorKey"""

    def __init__(self, max_genus: int, max_points: int):
        self.max_genus = max_genus
        self.max_points = max_points
        self.raw: Dict[CorrelatorKey, GaussianRational] = {}
        self.sources: Dict[CorrelatorKey, str] = {}

    def lookup(self, key: CorrelatorKey) -> Optional[GaussianRational]:
        key = key.sorted()
        if known_zero(key):
            return ZERO
        return self.raw.get(key)

    def set(self, key: CorrelatorKey, value, source: str):
        key = key.sorted()
        value = as_gaussian(value)
        if key in self.raw:
            if self.raw[key] != value:
                raise TableInconsistencyError(
                    f"{key}: {self.sources[key]} gives {format_gaussian(self.raw[key])}, "
                    f"{source} gives {format_gaussian(value)}")
            return
        self.raw[key] = value
        self.sources[key] = source

    def normalized(self, key: CorrelatorKey) -> Optional[Fraction]:
        value = self.lookup(key)
        return None if value is None else normalize(key.sorted(), value)

    def constant_term(self, l: int, h: int) -> GaussianRational:
        return CONSTANT_TERM.get((l, h), ZERO)

    def keys(self) -> List[CorrelatorKey]:
        return sorted(self.raw)

    def __len__(self):
        return len(self.raw)

    def __contains__(self, key):
        return key.sorted() in self.raw


def _table_universe(max_genus: int, max_points: int) -> List[CorrelatorKey]:
    keys = []
    for g in range(max_genus + 1):
        for l in range(g + 1):
            for n in range(1, max_points + 1):
                bound = 4 * g - l + n - 3
                for total in range(bound + 1):
                    for d in _partitions_with_zeros(total, n):
                        key = CorrelatorKey(d, l, g - l)
                        if not known_zero(key):
                            keys.append(key)
    return sorted(set(keys))


def _partitions_with_zeros(total: int, parts: int):
    """Non-decreasing tuples of `parts` non-negative integers summing to total"""
    for size in range(parts + 1):
        for nonzero in _partitions_into(total, size):
            yield (0,) * (parts - size) + tuple(sorted(nonzero))


def _lowered(d: Tuple[int, ...], j: int) -> Tuple[int, ...]:
    return d[:j] + (d[j] - 1,) + d[j + 1:]


def string_value(table: TauCoefficients, key: CorrelatorKey) -> Optional[GaussianRational]:
    """Raw <tau_0 X> from the quantum string equation, None if an input is missing"""
    d = list(key.d)
    d.remove(0)
    rest = tuple(d)
    total = ZERO
    if rest == (0, 0) and key.l == 0 and key.h == 0:
        total = total + ONE
    if not rest and key.l == 0 and key.h == 1:
        total = total + GaussianRational(0, Fraction(-1, 24))
    for j, dj in enumerate(rest):
        if dj == 0:
            continue
        value = table.lookup(CorrelatorKey(_lowered(rest, j), key.l, key.h))
        if value is None:
            return None
        total = total + value
    return total


def inverse_string_value(table: TauCoefficients, key: CorrelatorKey) -> Optional[GaussianRational]:
    """Raw <X> (no tau_0) from <tau_0 X + e_i> minus the other string terms, i at the largest entry"""
    d = key.d
    i = max(range(len(d)), key=lambda j: d[j])
    raised = d[:i] + (d[i] + 1,) + d[i + 1:]
    anchor = table.lookup(CorrelatorKey((0,) + raised, key.l, key.h))
    if anchor is None:
        return None
    total = anchor
    for j, dj in enumerate(raised):
        if j == i or dj == 0:
            continue
        value = table.lookup(CorrelatorKey(_lowered(raised, j), key.l, key.h))
        if value is None:
            return None
        total = total - value
    return total


def assemble_tau(max_genus: int, max_points: int, densities: Optional[Dict[int, DiffPoly]] = None,
                 budget: int = DEFAULT_EVAL_BUDGET, window_margin: int = DEFAULT_WINDOW_MARGIN,
                 progress: Optional[Callable[[Iterable], Iterable]] = None) -> TauCoefficients:
    """Fill the table from quantum correlators and the quantum string equation"""
    densities = densities or builtin_densities()
    table = TauCoefficients(max_genus, max_points)
    universe = _table_universe(max_genus, max_points)
    direct = []
    for key in universe:
        if 0 not in key.d or key.n < 2:
            continue
        rest = list(key.d)
        rest.remove(0)
        if all(x in densities for x in rest):
            direct.append((key, tuple(sorted(rest, reverse=True))))
    iterator = progress(direct) if progress else direct
    for key, rest in iterator:
        raw = quantum_correlator(rest, key.l, key.h, densities, budget, window_margin)
        table.set(key, raw, 'quantum correlator')
    logger.info(f"Table: {len(table)} entries from quantum correlators")

    changed = True
    while changed:
        changed = False
        for key in universe:
            if key in table:
                continue
            if 0 in key.d:
                value = string_value(table, key)
                source = 'string equation'
            else:
                value = inverse_string_value(table, key)
                source = 'inverse string equation'
            if value is not None:
                table.set(key, value, source)
                changed = True
    for key in universe:
        if 0 in key.d and table.sources.get(key) == 'quantum correlator':
            value = string_value(table, key)
            if value is not None:
                table.set(key, value, 'string equation')
    missing = [key for key in universe if key not in table]
    if missing:
        logger.info(f"Table: {len(missing)} entries not derivable at these bounds")
    logger.info(f"Table: {len(table)} entries for g <= {max_genus}, n <= {max_points}")
    return table


def classical_correlator(d: Sequence[int], g: int) -> Fraction:
    """<tau_d>_g from the string and dilaton equations, seeded by <tau_0^3>_0 and <tau_1>_1"""
    d = tuple(sorted(d))
    n = len(d)
    if any(x < 0 for x in d):
        return Fraction(0)
    if 2 * g - 2 + n <= 0 or sum(d) != 3 * g - 3 + n:
        return Fraction(0)
    if g == 0 and d == (0, 0, 0):
        return Fraction(1)
    if g == 1 and d == (1,):
        return Fraction(1, 24)
    if 0 in d:
        rest = list(d)
        rest.remove(0)
        return sum((classical_correlator(_lowered(tuple(rest), j), g)
                    for j in range(len(rest)) if rest[j]), Fraction(0))
    if 1 in d:
        rest = list(d)
        rest.remove(1)
        return (2 * g - 2 + len(rest)) * classical_correlator(rest, g)
    raise PreconditionError(f"<{d}>_{g} is not reducible by string and dilaton")


def classical_slice_mismatches(table: TauCoefficients) -> List[Dict]:
    """Entries with h = 0 and genus <= 1 compared with the classical numbers"""
    mismatches = []
    for key in table.keys():
        if key.h or key.g > 1:
            continue
        expected = classical_correlator(key.d, key.g)
        actual = table.normalized(key)
        if actual != expected:
            mismatches.append({'key': str(key), 'table': actual, 'classical': expected})
    return mismatches


def dilaton_residuals(table: TauCoefficients) -> List[Dict]:
    """raw<tau_1 X> - (|X| + 2l + 2h - 2) raw<X> - delta_{X empty} [eps^2] 1/24"""
    residuals = []
    candidates = set(table.keys())
    for g in range(table.max_genus + 1):
        for l in range(g + 1):
            candidates.add(CorrelatorKey((1,), l, g - l))
    for key in sorted(candidates):
        if 1 not in key.d:
            continue
        outer = table.lookup(key)
        rest = list(key.d)
        rest.remove(1)
        if rest:
            inner = table.lookup(CorrelatorKey(rest, key.l, key.h))
        else:
            inner = table.constant_term(key.l, key.h)
        if outer is None or inner is None:
            continue
        residual = outer - inner * (len(rest) + 2 * key.l + 2 * key.h - 2)
        if not rest and key.l == 1 and key.h == 0:
            residual = residual - Fraction(1, 24)
        residuals.append({'key': str(key), 'residual': residual})
        if residual:
            logger.warning(f"Dilaton residual at {key}: {format_gaussian(residual)}")
    return residuals
