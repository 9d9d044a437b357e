"""
Infinite wedge calculus: operator words in alpha_k and E_r(z), vacuum
expectations by normal-ordering rewrites, and a direct Fock-space oracle
"""

import dataclasses
import logging
import re
import threading
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from cachetools import LRUCache, cached
from cachetools.keys import hashkey

from exact_arith import ParseError
from series import (Form, LaurentSeries, SeriesError, TruncatedSeries, canonical_form,
                    exp_series, varsigma_product)

logger = logging.getLogger(__name__)


class WedgeError(ValueError):
    """Raised when a word cannot be evaluated"""


class FockCutoffError(WedgeError):
    """Raised when a Fock state leaves the fermionic cutoff window"""


@dataclasses.dataclass(frozen=True)
class LinearForm:
    """Integer linear combination of formal variables, e.g. z1 + 2 z2"""
    coeffs: Form = ()

    def __post_init__(self):
        object.__setattr__(self, 'coeffs', canonical_form(self.coeffs))

    @classmethod
    def var(cls, name: str, coef: int = 1) -> "LinearForm":
        return cls(((name, coef),))

    @classmethod
    def parse(cls, text: str) -> "LinearForm":
        """Parse "z", "2z", "z1-2z2", "-w" or "0" """
        text = text.replace(' ', '')
        if text in ('', '0'):
            return cls()
        pos = 0
        terms = []
        for match in _FORM_TERM_RE.finditer(text):
            if match.start() != pos:
                break
            sign = -1 if match.group('sign') == '-' else 1
            coef = int(match.group('coef')) if match.group('coef') else 1
            terms.append((match.group('name'), sign * coef))
            pos = match.end()
        if pos != len(text) or not terms:
            raise ParseError(f"Malformed linear form: {text!r}")
        return cls(tuple(terms))

    def is_zero(self) -> bool:
        return not self.coeffs

    def variables(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.coeffs)

    def __add__(self, other: "LinearForm") -> "LinearForm":
        return LinearForm(self.coeffs + other.coeffs)

    def __neg__(self) -> "LinearForm":
        return self.scale(-1)

    def __sub__(self, other: "LinearForm") -> "LinearForm":
        return self + (-other)

    def scale(self, factor: int) -> "LinearForm":
        return LinearForm(tuple((n, c * factor) for n, c in self.coeffs))

    def __str__(self):
        if not self.coeffs:
            return '0'
        out = ''
        for name, coef in self.coeffs:
            sign = '-' if coef < 0 else ('+' if out else '')
            mag = abs(coef)
            out += f"{sign}{'' if mag == 1 else mag}{name}"
        return out


_FORM_TERM_RE = re.compile(r'(?P<sign>[+-]?)(?P<coef>\d*)(?P<name>[A-Za-z_][A-Za-z_0-9]*)')


@dataclasses.dataclass(frozen=True)
class WedgeGenerator:
    """alpha_k (kind 'alpha', k != 0) or E_r(arg) (kind 'E')"""
    kind: str
    energy: int
    arg: LinearForm = LinearForm()

    def __post_init__(self):
        if self.kind == 'alpha':
            if self.energy == 0:
                raise WedgeError("alpha_0 is not a generator")
            if not self.arg.is_zero():
                raise WedgeError("alpha generators carry no argument")
        elif self.kind != 'E':
            raise WedgeError(f"Unknown generator kind {self.kind!r}")
        elif self.energy == 0 and self.arg.is_zero():
            raise WedgeError("E0 at the zero argument is undefined")

    @classmethod
    def alpha(cls, k: int) -> "WedgeGenerator":
        return cls('alpha', k)

    @classmethod
    def e(cls, r: int, arg: LinearForm) -> "WedgeGenerator":
        """E_r(arg); E_r(0) with r != 0 is identified with alpha_r"""
        if arg.is_zero() and r != 0:
            return cls('alpha', r)
        return cls('E', r, arg)

    @property
    def is_alpha(self) -> bool:
        return self.kind == 'alpha'

    def __str__(self):
        if self.is_alpha:
            return f"a{self.energy}"
        return f"E{self.energy}({self.arg})"


class WedgeWord:
    """Ordered product of generators inside a vacuum expectation"""

    __slots__ = ('generators',)

    def __init__(self, generators: Iterable[WedgeGenerator] = ()):
        self.generators = tuple(generators)

    @classmethod
    def parse(cls, text: str) -> "WedgeWord":
        """Parse whitespace-separated tokens like "a2 E0(z) a-2" """
        gens = []
        for token in text.split():
            alpha = re.fullmatch(r'a(-?\d+)', token)
            if alpha:
                k = int(alpha.group(1))
                if k == 0:
                    raise ParseError("alpha_0 is not a generator")
                gens.append(WedgeGenerator.alpha(k))
                continue
            e_op = re.fullmatch(r'E(-?\d+)\(([^()]*)\)', token)
            if not e_op:
                raise ParseError(f"Malformed wedge token: {token!r}")
            r = int(e_op.group(1))
            arg = LinearForm.parse(e_op.group(2))
            if r == 0 and arg.is_zero():
                raise ParseError("E0(0) is undefined")
            gens.append(WedgeGenerator.e(r, arg))
        return cls(gens)

    @property
    def energy(self) -> int:
        return sum(g.energy for g in self.generators)

    def variables(self) -> Tuple[str, ...]:
        seen: List[str] = []
        for gen in self.generators:
            for name in gen.arg.variables():
                if name not in seen:
                    seen.append(name)
        return tuple(seen)

    def __len__(self):
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)

    def __str__(self):
        return ' '.join(str(g) for g in self.generators)

    def __repr__(self):
        return f"WedgeWord({str(self)!r})"


# --- symbolic scalars -------------------------------------------------------

SigmaMonomial = Tuple[Tuple[Form, int], ...]


def _orient(form: Form) -> Tuple[Form, int]:
    """Return (form', sign) with varsigma(form) = sign * varsigma(form')"""
    if form and form[0][1] < 0:
        return tuple((n, -c) for n, c in form), -1
    return form, 1


class SigmaExpr:
    """Finite rational combination of products of varsigma(L)^(+-1)"""

    __slots__ = ('terms',)

    def __init__(self, terms: Optional[Dict[SigmaMonomial, Fraction]] = None):
        self.terms = {m: c for m, c in (terms or {}).items() if c}

    @classmethod
    def zero(cls) -> "SigmaExpr":
        return cls()

    @classmethod
    def scalar(cls, value) -> "SigmaExpr":
        return cls({(): Fraction(value)})

    @classmethod
    def one(cls) -> "SigmaExpr":
        return cls.scalar(1)

    @classmethod
    def varsigma(cls, form: LinearForm, power: int = 1) -> "SigmaExpr":
        if form.is_zero():
            if power < 0:
                raise WedgeError("varsigma at the zero linear form in a denominator")
            return cls.zero() if power else cls.one()
        oriented, sign = _orient(form.coeffs)
        return cls({((oriented, power),): Fraction(sign ** (power % 2))})

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "SigmaExpr") -> "SigmaExpr":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return SigmaExpr(out)

    def scale(self, factor) -> "SigmaExpr":
        factor = Fraction(factor)
        return SigmaExpr({m: c * factor for m, c in self.terms.items()})

    def __mul__(self, other: "SigmaExpr") -> "SigmaExpr":
        out: Dict[SigmaMonomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                powers = dict(m1)
                for form, e in m2:
                    powers[form] = powers.get(form, 0) + e
                key = tuple(sorted((f, e) for f, e in powers.items() if e))
                out[key] = out.get(key, 0) + c1 * c2
        return SigmaExpr(out)

    def __eq__(self, other):
        if not isinstance(other, SigmaExpr):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __str__(self):
        if not self.terms:
            return '0'
        parts = []
        for mono, coef in sorted(self.terms.items(), key=lambda t: str(t[0])):
            factors = [f"s({LinearForm(form)})" + (f"^{e}" if e != 1 else '') for form, e in mono]
            parts.append(' '.join([str(coef)] + factors))
        return ' + '.join(parts)

    def to_laurent(self, variables: Sequence[str], cap: int) -> LaurentSeries:
        """Expand as a Laurent series in variables to total degree cap"""
        total = LaurentSeries.zero(variables, max(cap, 0))
        for mono, coef in self.terms.items():
            numerators: List[Form] = []
            denominators: List[Form] = []
            for form, e in mono:
                (numerators if e > 0 else denominators).extend([form] * abs(e))
            try:
                term = varsigma_product(numerators, denominators, variables, cap)
            except SeriesError as e:
                raise WedgeError(f"Cannot expand {self}: {e}")
            total = total + term.scale(coef)
        return total


# --- rewrite system ---------------------------------------------------------

def commutator_word(x: WedgeGenerator, y: WedgeGenerator) -> Optional[Tuple[SigmaExpr, Optional[WedgeGenerator]]]:
    """[x, y] as (scalar, generator) or (scalar, None) for a central term

    Uses [E_a(z), E_b(w)] = varsigma(aw - bz) E_{a+b}(z+w) with alpha_k = E_k(0);
    when a+b = 0 and z+w = 0 the bracket is the central scalar a.
    Returns None when the bracket vanishes.
    """
    a, z = x.energy, x.arg
    b, w = y.energy, y.arg
    merged_energy = a + b
    merged_arg = z + w
    if merged_energy == 0 and merged_arg.is_zero():
        return (SigmaExpr.scalar(a), None) if a else None
    det = w.scale(a) - z.scale(b)
    if det.is_zero():
        return None
    return SigmaExpr.varsigma(det), WedgeGenerator.e(merged_energy, merged_arg)


class _Fuel:
    """Bounds the number of rewrite steps of one evaluation"""

    def __init__(self, limit: int):
        self.remaining = limit

    def spend(self, word):
        self.remaining -= 1
        if self.remaining < 0:
            raise WedgeError(f"Rewrite fuel exhausted while evaluating {WedgeWord(word)}")


DEFAULT_FUEL = 2_000_000

_VEV_CACHE: LRUCache = LRUCache(maxsize=200_000)
_VEV_LOCK = threading.Lock()


@cached(cache=_VEV_CACHE, key=lambda word, fuel: hashkey(word), lock=_VEV_LOCK)
def _vev_rewrite(word: Tuple[WedgeGenerator, ...], fuel: _Fuel) -> SigmaExpr:
    # Each step either shortens the word or swaps a non-negative generator past
    # a negative one to its right, so (length, number of such inversions)
    # decreases lexicographically.
    fuel.spend(word)
    if not word:
        return SigmaExpr.one()
    if sum(g.energy for g in word) != 0:
        return SigmaExpr.zero()
    pos = max(i for i, g in enumerate(word) if g.energy >= 0)
    gen = word[pos]
    if pos == len(word) - 1:
        if gen.energy > 0:
            return SigmaExpr.zero()
        if gen.arg.is_zero():
            raise WedgeError("E0 at the zero argument reached the vacuum")
        return _vev_rewrite(word[:-1], fuel) * SigmaExpr.varsigma(gen.arg, -1)
    right = word[pos + 1]
    result = _vev_rewrite(word[:pos] + (right, gen) + word[pos + 2:], fuel)
    bracket = commutator_word(gen, right)
    if bracket is not None:
        coef, merged = bracket
        rest = word[:pos] + ((merged,) if merged is not None else ()) + word[pos + 2:]
        result = result + coef * _vev_rewrite(rest, fuel)
    return result


def vev_symbolic(word: WedgeWord, fuel: int = DEFAULT_FUEL) -> SigmaExpr:
    """<word> as an exact combination of varsigma monomials"""
    return _vev_rewrite(tuple(word.generators), _Fuel(fuel))


def clear_vev_cache():
    with _VEV_LOCK:
        _VEV_CACHE.clear()


def _check_variables(word: WedgeWord, variables: Sequence[str]):
    undeclared = [v for v in word.variables() if v not in variables]
    if undeclared:
        raise WedgeError(f"Word {word} uses undeclared variables {undeclared}")


def vev(word: WedgeWord, variables: Sequence[str], cap: int) -> LaurentSeries:
    """Vacuum expectation of word as a Laurent series to total degree cap"""
    variables = tuple(variables)
    _check_variables(word, variables)
    expr = vev_symbolic(word)
    logger.debug(f"vev {word} = {expr}")
    return expr.to_laurent(variables, cap)


# --- Fock space oracle ------------------------------------------------------
# A half-integer position k = m + 1/2 is stored as the integer m; the vacuum
# occupies every m <= -1. A charge-zero state is (particles, holes) with
# particles >= 0 occupied and holes <= -1 empty.

FockState = Tuple[Tuple[int, ...], Tuple[int, ...]]

VACUUM: FockState = ((), ())


def _occupied(state: FockState, m: int) -> bool:
    particles, holes = state
    return m in particles if m >= 0 else m not in holes


def _count_above(state: FockState, m: int) -> int:
    """Number of occupied positions strictly above m"""
    particles, holes = state
    count = sum(1 for p in particles if p > m)
    if m < -1:
        count += (-1 - m) - sum(1 for h in holes if h > m)
    return count


def _remove(state: FockState, m: int) -> FockState:
    particles, holes = state
    if m >= 0:
        return tuple(p for p in particles if p != m), holes
    return particles, tuple(sorted(holes + (m,)))


def _insert(state: FockState, m: int) -> FockState:
    particles, holes = state
    if m >= 0:
        return tuple(sorted(particles + (m,))), holes
    return particles, tuple(h for h in holes if h != m)


def describe_state(state: FockState) -> str:
    particles, holes = state
    fmt = lambda ms: ', '.join(str(Fraction(2 * m + 1, 2)) for m in ms)
    return f"particles [{fmt(particles)}] holes [{fmt(holes)}]"


def _check_cutoff(state: FockState, energy: int, cutoff: int):
    particles, holes = state
    margin = abs(energy)
    if cutoff < margin or any(p > cutoff - 1 - margin for p in particles) or \
            any(h < -cutoff + margin for h in holes):
        raise FockCutoffError(
            f"Cutoff {cutoff} too small for energy {energy} at state {describe_state(state)}")


def _apply_generator(gen: WedgeGenerator, vector: Dict[FockState, LaurentSeries],
                     variables: Tuple[str, ...], cap: int, headroom: int,
                     cutoff: int) -> Dict[FockState, LaurentSeries]:
    r = gen.energy
    out: Dict[FockState, LaurentSeries] = {}

    def weight(m: int):
        if gen.arg.is_zero():
            return None
        return exp_series(gen.arg.coeffs, Fraction(2 * m + 1 - r, 2), variables, cap + headroom)

    for state, coef in vector.items():
        _check_cutoff(state, r, cutoff)
        # :psi_{k-r} psi_k^*: summed over |k| < cutoff
        for m in range(-cutoff, cutoff):
            target = m - r
            if r == 0:
                if m >= 0 and _occupied(state, m):
                    sign = 1
                elif m < 0 and not _occupied(state, m):
                    sign = -1
                else:
                    continue
                new_state = state
            else:
                if not _occupied(state, m) or _occupied(state, target):
                    continue
                sign = (-1) ** _count_above(state, m)
                removed = _remove(state, m)
                sign *= (-1) ** _count_above(removed, target)
                new_state = _insert(removed, target)
            w = weight(m)
            term = coef.scale(sign) if w is None else (coef * w).scale(sign)
            out[new_state] = out[new_state] + term if new_state in out else term
        if r == 0:
            if len(gen.arg.coeffs) != 1:
                raise WedgeError(f"fock_vev supports E0 only at single-variable arguments, got {gen}")
            inv = varsigma_product([], [gen.arg.coeffs], variables, cap + headroom)
            term = coef * inv
            out[state] = out[state] + term if state in out else term
    return {s: c for s, c in out.items() if not c.is_zero()}


def apply_word(word: WedgeWord, variables: Sequence[str], cap: int, cutoff: int,
               state: FockState = VACUUM) -> Dict[FockState, LaurentSeries]:
    """Act with the word (rightmost generator first) on a basis state"""
    variables = tuple(variables)
    _check_variables(word, variables)
    headroom = sum(1 for g in word if g.energy == 0)
    start = LaurentSeries(TruncatedSeries.one(variables, cap + headroom))
    vector = {state: start}
    for gen in reversed(word.generators):
        vector = _apply_generator(gen, vector, variables, cap, headroom, cutoff)
        if not vector:
            break
    return vector


def fock_vev(word: WedgeWord, variables: Sequence[str], cap: int, cutoff: int) -> LaurentSeries:
    """<word> by literal action on Fock states inside |k| < cutoff"""
    variables = tuple(variables)
    vector = apply_word(word, variables, cap, cutoff)
    result = vector.get(VACUUM)
    if result is None:
        return LaurentSeries.zero(variables, cap)
    return result.with_cap(cap) if result.cap > cap else result


def confirm_vacuum_rules(max_energy: int, cap: int, cutoff: Optional[int] = None) -> Dict:
    """Check E_r v = 0 (r > 0), <v| E_{-r} = 0 and <E_0(z)> = 1/varsigma(z) on the oracle"""
    variables = ('z',)
    z = LinearForm.var('z')
    cutoff = cutoff or max_energy + 2
    checks = []
    # sample of low-energy states: the vacuum and alpha_{-1}^j v
    states = [VACUUM]
    for j in range(1, max_energy + 1):
        reached = apply_word(WedgeWord([WedgeGenerator.alpha(-1)] * j), variables, cap,
                             cutoff + max_energy)
        states.extend(sorted(reached))
    for r in range(1, max_energy + 1):
        for gen in (WedgeGenerator.e(r, z), WedgeGenerator.alpha(r)):
            killed = not apply_word(WedgeWord([gen]), variables, cap, cutoff)
            checks.append((f"{gen} annihilates the vacuum", killed))
            raising = WedgeGenerator.e(-r, z) if gen.kind == 'E' else WedgeGenerator.alpha(-r)
            hits = [s for s in states
                    if VACUUM in apply_word(WedgeWord([raising]), variables, cap,
                                            cutoff + 2 * max_energy, state=s)]
            checks.append((f"<v| {raising} = 0", not hits))
    expected = varsigma_product([], [z.coeffs], variables, cap)
    got = fock_vev(WedgeWord([WedgeGenerator.e(0, z)]), variables, cap, cutoff)
    checks.append(("<E0(z)> = 1/varsigma(z)", got.agrees_with(expected)))
    success = all(ok for _, ok in checks)
    if not success:
        logger.error(f"Vacuum rules failed: {[name for name, ok in checks if not ok]}")
    return {'success': success, 'checks': checks}
