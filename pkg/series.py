"""
Truncated multivariate power series, Laurent prefactors and polynomials
over the Gaussian rationals, plus the universal series varsigma and S
"""

import logging
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from exact_arith import ONE, ZERO, GaussianRational, as_gaussian, factorial, format_gaussian

logger = logging.getLogger(__name__)

Exponent = Tuple[int, ...]
# A linear form is a tuple of (variable, integer coefficient) pairs.
Form = Tuple[Tuple[str, int], ...]


class SeriesError(ValueError):
    """Raised on invalid series operations"""


def _drop_zeros(terms: Dict[Exponent, GaussianRational]) -> Dict[Exponent, GaussianRational]:
    return {e: c for e, c in terms.items() if c}


def exponents_up_to(nvars: int, cap: int) -> Iterator[Exponent]:
    """All exponent vectors of length nvars with total degree <= cap, by degree"""
    def rec(prefix, remaining, slots):
        if slots == 1:
            yield prefix + (remaining,)
            return
        for e in range(remaining, -1, -1):
            yield from rec(prefix + (e,), remaining - e, slots - 1)
    if nvars == 0:
        yield ()
        return
    for degree in range(cap + 1):
        yield from rec((), degree, nvars)


def _render_monomial(variables: Sequence[str], exps: Exponent) -> str:
    parts = []
    for name, e in zip(variables, exps):
        if e == 1:
            parts.append(name)
        elif e:
            parts.append(f"{name}^{e}")
    return ' '.join(parts)


def _render(variables, items) -> str:
    rendered = []
    for exps, coef in items:
        mono = _render_monomial(variables, exps)
        rendered.append(f"{format_gaussian(coef)} * {mono}" if mono else format_gaussian(coef))
    return ' + '.join(rendered) if rendered else '0'


def _sort_key(exps: Exponent):
    return (sum(exps), tuple(-e for e in exps))


class TruncatedSeries:
    """Power series in named variables, known up to a total-degree cap"""

    __slots__ = ('variables', 'cap', 'terms')

    def __init__(self, variables: Sequence[str], cap: int,
                 terms: Optional[Dict[Exponent, object]] = None, _trusted: bool = False):
        self.variables = tuple(variables)
        self.cap = cap
        if cap < 0:
            raise SeriesError(f"Negative cap {cap}")
        if _trusted:
            self.terms = terms
            return
        clean = {}
        nvars = len(self.variables)
        for exps, coef in (terms or {}).items():
            exps = tuple(exps)
            if len(exps) != nvars or any(e < 0 for e in exps):
                raise SeriesError(f"Bad exponent vector {exps} for variables {self.variables}")
            if sum(exps) > cap:
                continue
            coef = as_gaussian(coef)
            if coef:
                clean[exps] = coef
        self.terms = clean

    # construction helpers

    @classmethod
    def zero(cls, variables: Sequence[str], cap: int) -> "TruncatedSeries":
        return cls(variables, cap, {}, _trusted=True)

    @classmethod
    def constant(cls, value, variables: Sequence[str], cap: int) -> "TruncatedSeries":
        return cls(variables, cap, {(0,) * len(tuple(variables)): value})

    @classmethod
    def one(cls, variables: Sequence[str], cap: int) -> "TruncatedSeries":
        return cls.constant(ONE, variables, cap)

    @classmethod
    def variable(cls, name: str, variables: Sequence[str], cap: int) -> "TruncatedSeries":
        variables = tuple(variables)
        if name not in variables:
            raise SeriesError(f"Unknown variable {name!r}")
        exps = tuple(1 if v == name else 0 for v in variables)
        return cls(variables, cap, {exps: ONE})

    @classmethod
    def linear(cls, form: Form, variables: Sequence[str], cap: int) -> "TruncatedSeries":
        """The degree-one series sum c_v * v of a linear form"""
        variables = tuple(variables)
        terms = {}
        for name, coef in form:
            if name not in variables:
                raise SeriesError(f"Linear form uses undeclared variable {name!r}")
            exps = tuple(1 if v == name else 0 for v in variables)
            terms[exps] = terms.get(exps, ZERO) + coef
        return cls(variables, cap, terms)

    # inspection

    def coef(self, exps: Sequence[int]) -> GaussianRational:
        """Stored coefficient, zero when absent; SeriesError past the cap, where
        coefficients are unknown rather than zero"""
        exps = tuple(exps)
        if sum(exps) > self.cap:
            raise SeriesError(f"Coefficient {exps} lies beyond cap {self.cap}")
        return self.terms.get(exps, ZERO)

    def constant_term(self) -> GaussianRational:
        return self.terms.get((0,) * len(self.variables), ZERO)

    def is_zero(self) -> bool:
        return not self.terms

    def valuation(self) -> Optional[int]:
        """Lowest total degree present, None for zero"""
        if not self.terms:
            return None
        return min(sum(e) for e in self.terms)

    def items(self) -> List[Tuple[Exponent, GaussianRational]]:
        return sorted(self.terms.items(), key=lambda item: _sort_key(item[0]))

    def __str__(self):
        return _render(self.variables, self.items())

    def __repr__(self):
        return f"TruncatedSeries({self.variables}, cap={self.cap}, {self})"

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return (self.variables == other.variables and self.cap == other.cap
                and self.terms == other.terms)

    def __hash__(self):
        return hash((self.variables, self.cap, frozenset(self.terms.items())))

    def agrees_with(self, other: "TruncatedSeries") -> bool:
        """Coefficientwise equality up to the smaller cap"""
        self._check_compatible(other)
        cap = min(self.cap, other.cap)
        return self.with_cap(cap).terms == other.with_cap(cap).terms

    # ring operations

    def _check_compatible(self, other: "TruncatedSeries"):
        if self.variables != other.variables:
            raise SeriesError(f"Variable mismatch: {self.variables} vs {other.variables}")

    def with_cap(self, cap: int) -> "TruncatedSeries":
        if cap > self.cap:
            raise SeriesError(f"Cannot raise cap from {self.cap} to {cap}")
        if cap == self.cap:
            return self
        return TruncatedSeries(self.variables, cap,
                               {e: c for e, c in self.terms.items() if sum(e) <= cap},
                               _trusted=True)

    def __add__(self, other):
        if not isinstance(other, TruncatedSeries):
            return self + TruncatedSeries.constant(other, self.variables, self.cap)
        self._check_compatible(other)
        cap = min(self.cap, other.cap)
        out = {e: c for e, c in self.terms.items() if sum(e) <= cap}
        for e, c in other.terms.items():
            if sum(e) <= cap:
                out[e] = out[e] + c if e in out else c
        return TruncatedSeries(self.variables, cap, _drop_zeros(out), _trusted=True)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(self.variables, self.cap,
                               {e: -c for e, c in self.terms.items()}, _trusted=True)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, factor) -> "TruncatedSeries":
        factor = as_gaussian(factor)
        if not factor:
            return TruncatedSeries.zero(self.variables, self.cap)
        return TruncatedSeries(self.variables, self.cap,
                               {e: c * factor for e, c in self.terms.items()}, _trusted=True)

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            return self.scale(other)
        self._check_compatible(other)
        cap = min(self.cap, other.cap)
        return TruncatedSeries(self.variables, cap,
                               _mul_terms(self.terms, other.terms, cap), _trusted=True)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "TruncatedSeries":
        if n < 0:
            return self.reciprocal() ** (-n)
        result = TruncatedSeries.one(self.variables, self.cap)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def mul_monomial(self, exps: Sequence[int], extend_cap: bool = True) -> "TruncatedSeries":
        """Multiply by a monomial; the cap grows by its degree when extend_cap"""
        exps = tuple(exps)
        cap = self.cap + sum(exps) if extend_cap else self.cap
        shifted = {tuple(a + b for a, b in zip(e, exps)): c for e, c in self.terms.items()}
        return TruncatedSeries(self.variables, cap,
                               {e: c for e, c in shifted.items() if sum(e) <= cap}, _trusted=True)

    def reciprocal(self) -> "TruncatedSeries":
        """1/f for f with invertible constant term"""
        c0 = self.constant_term()
        if not c0:
            raise SeriesError("Reciprocal of a series with zero constant term")
        inv_c0 = c0.inverse()
        zero_exp = (0,) * len(self.variables)
        others = [(e, c) for e, c in self.terms.items() if e != zero_exp]
        inv = {zero_exp: inv_c0}
        for exps in exponents_up_to(len(self.variables), self.cap):
            if exps == zero_exp:
                continue
            acc = ZERO
            for e1, c1 in others:
                rest = tuple(a - b for a, b in zip(exps, e1))
                if min(rest) < 0:
                    continue
                prev = inv.get(rest)
                if prev:
                    acc = acc + c1 * prev
            if acc:
                inv[exps] = -(acc * inv_c0)
        return TruncatedSeries(self.variables, self.cap, _drop_zeros(inv), _trusted=True)

    def embed(self, variables: Sequence[str], cap: Optional[int] = None) -> "TruncatedSeries":
        """Re-express in a larger (or reordered) variable list"""
        variables = tuple(variables)
        missing = [v for v in self.variables if v not in variables]
        if missing:
            raise SeriesError(f"Cannot embed: variables {missing} are not in {variables}")
        positions = [variables.index(v) for v in self.variables]
        cap = self.cap if cap is None else min(cap, self.cap)
        terms = {}
        for exps, coef in self.terms.items():
            if sum(exps) > cap:
                continue
            full = [0] * len(variables)
            for pos, e in zip(positions, exps):
                full[pos] = e
            terms[tuple(full)] = coef
        return TruncatedSeries(variables, cap, terms, _trusted=True)

    def coefficient_in(self, name: str, power: int) -> "TruncatedSeries":
        """Coefficient of name**power, as a series in the remaining variables"""
        if name not in self.variables:
            raise SeriesError(f"Unknown variable {name!r}")
        index = self.variables.index(name)
        rest = self.variables[:index] + self.variables[index + 1:]
        terms = {}
        for exps, coef in self.terms.items():
            if exps[index] == power:
                terms[exps[:index] + exps[index + 1:]] = coef
        return TruncatedSeries(rest, max(self.cap - power, 0), terms, _trusted=True)


def _mul_terms(a_terms, b_terms, cap):
    out: Dict[Exponent, GaussianRational] = {}
    b_items = sorted(((sum(e), e, c) for e, c in b_terms.items()), key=lambda t: t[0])
    for ea, ca in a_terms.items():
        room = cap - sum(ea)
        if room < 0:
            continue
        for db, eb, cb in b_items:
            if db > room:
                break
            key = tuple(x + y for x, y in zip(ea, eb))
            prod = ca * cb
            prev = out.get(key)
            out[key] = prod if prev is None else prev + prod
    return _drop_zeros(out)


def add(f: TruncatedSeries, g: TruncatedSeries) -> TruncatedSeries:
    return f + g


def mul(f: TruncatedSeries, g: TruncatedSeries) -> TruncatedSeries:
    return f * g


def reciprocal(f: TruncatedSeries) -> TruncatedSeries:
    return f.reciprocal()


def coef_extract(f, exps: Sequence[int]) -> GaussianRational:
    """Coefficient of a monomial of total degree <= cap (zero if not stored);
    raises SeriesError beyond the cap"""
    return f.coef(exps)


def compose(f: TruncatedSeries, g: TruncatedSeries) -> TruncatedSeries:
    """f(g) for univariate f and g without constant term"""
    if len(f.variables) != 1:
        raise SeriesError(f"compose needs a univariate outer series, got {f.variables}")
    if g.constant_term():
        raise SeriesError("compose needs an inner series with zero constant term")
    low = g.valuation()
    if low is None:
        return TruncatedSeries.constant(f.coef((0,)), g.variables, g.cap)
    # f's unknown terms start at degree (f.cap + 1) * low in the result
    cap = min(g.cap, (f.cap + 1) * low - 1)
    g = g.with_cap(cap)
    result = TruncatedSeries.constant(f.coef((0,)), g.variables, cap)
    power = TruncatedSeries.one(g.variables, cap)
    for j in range(1, f.cap + 1):
        if j * low > cap:
            break
        power = power * g
        c = f.terms.get((j,))
        if c:
            result = result + power.scale(c)
    return result


@lru_cache(maxsize=None)
def varsigma(var: str, cap: int) -> TruncatedSeries:
    """varsigma(z) = e^{z/2} - e^{-z/2} = 2 sinh(z/2)"""
    if cap < 1:
        raise SeriesError(f"varsigma needs cap >= 1, got {cap}")
    terms = {}
    for k in range((cap - 1) // 2 + 1):
        terms[(2 * k + 1,)] = Fraction(1, 4 ** k * factorial(2 * k + 1))
    return TruncatedSeries((var,), cap, terms)


@lru_cache(maxsize=None)
def s_series(var: str, cap: int) -> TruncatedSeries:
    """S(z) = varsigma(z) / z"""
    if cap < 0:
        raise SeriesError(f"s_series needs cap >= 0, got {cap}")
    terms = {}
    for k in range(cap // 2 + 1):
        terms[(2 * k,)] = Fraction(1, 4 ** k * factorial(2 * k + 1))
    return TruncatedSeries((var,), cap, terms)


@lru_cache(maxsize=None)
def exp_univariate(var: str, cap: int) -> TruncatedSeries:
    return TruncatedSeries((var,), cap, {(j,): Fraction(1, factorial(j)) for j in range(cap + 1)})


def form_is_zero(form: Form) -> bool:
    return all(c == 0 for _, c in form)


def canonical_form(form: Iterable[Tuple[str, int]]) -> Form:
    """Merge repeated variables, drop zeros, sort by name"""
    acc: Dict[str, int] = {}
    for name, coef in form:
        acc[name] = acc.get(name, 0) + coef
    return tuple(sorted((n, c) for n, c in acc.items() if c))


@lru_cache(maxsize=4096)
def _univariate_of_form(kind: str, form: Form, variables: Tuple[str, ...], cap: int) -> TruncatedSeries:
    if kind == 'varsigma':
        outer = varsigma('s', cap)
    elif kind == 'S':
        outer = s_series('s', cap)
    elif kind == 'invS':
        outer = s_series('s', cap).reciprocal()
    elif kind == 'exp':
        outer = exp_univariate('s', cap)
    else:
        raise SeriesError(f"Unknown univariate kind {kind!r}")
    return compose(outer, TruncatedSeries.linear(form, variables, cap))


def series_of_form(kind: str, form: Form, variables: Sequence[str], cap: int) -> TruncatedSeries:
    """varsigma/S/1/S/exp evaluated at a linear form"""
    form = canonical_form(form)
    variables = tuple(variables)
    if form_is_zero(form):
        constants = {'varsigma': 0, 'S': 1, 'invS': 1, 'exp': 1}
        return TruncatedSeries.constant(constants[kind], variables, cap)
    return _univariate_of_form(kind, form, variables, cap)


def exp_series(form: Form, scale, variables: Sequence[str], cap: int) -> TruncatedSeries:
    """e^{scale * L} for a linear form L"""
    return _exp_series(canonical_form(form), Fraction(scale), tuple(variables), cap)


@lru_cache(maxsize=8192)
def _exp_series(form: Form, scale: Fraction, variables: Tuple[str, ...], cap: int) -> TruncatedSeries:
    if scale.denominator == 1:
        return series_of_form('exp', tuple((n, c * int(scale)) for n, c in form), variables, cap)
    # half-integer weights: expand e^{u} with u = scale*L directly
    inner = TruncatedSeries.linear(form, variables, cap).scale(scale)
    if inner.is_zero():
        return TruncatedSeries.one(variables, cap)
    return compose(exp_univariate('s', cap), inner)


class LaurentSeries:
    """A truncated series times the monomial prefactor z^(-shift)

    cap bounds the total degree of the represented Laurent series; the body
    is kept to cap + |shift|.
    """

    __slots__ = ('body', 'shift')

    def __init__(self, body: TruncatedSeries, shift: Optional[Sequence[int]] = None):
        shift = tuple(shift) if shift is not None else (0,) * len(body.variables)
        if len(shift) != len(body.variables) or min(shift, default=0) < 0:
            raise SeriesError(f"Bad Laurent shift {shift}")
        if body.cap < sum(shift):
            raise SeriesError("Laurent body cap smaller than its prefactor degree")
        self.body = body
        self.shift = shift

    @classmethod
    def from_series(cls, series: TruncatedSeries) -> "LaurentSeries":
        return cls(series)

    @classmethod
    def zero(cls, variables: Sequence[str], cap: int) -> "LaurentSeries":
        return cls(TruncatedSeries.zero(variables, cap))

    @property
    def variables(self) -> Tuple[str, ...]:
        return self.body.variables

    @property
    def cap(self) -> int:
        return self.body.cap - sum(self.shift)

    def _reduced(self) -> "LaurentSeries":
        shift = list(self.shift)
        for i, s in enumerate(shift):
            if not s:
                continue
            low = min((e[i] for e in self.body.terms), default=s)
            shift[i] = s - min(s, low)
        if tuple(shift) == self.shift:
            return self
        drop = tuple(a - b for a, b in zip(self.shift, shift))
        terms = {tuple(x - y for x, y in zip(e, drop)): c for e, c in self.body.terms.items()}
        cap = self.cap
        body = TruncatedSeries(self.variables, cap + sum(shift), terms, _trusted=True)
        return LaurentSeries(body, shift)

    def _with_shift(self, shift: Sequence[int]) -> TruncatedSeries:
        """Body rescaled to a larger common shift"""
        extra = tuple(a - b for a, b in zip(shift, self.shift))
        if min(extra) < 0:
            raise SeriesError("Cannot lower a Laurent shift")
        return self.body.mul_monomial(extra)

    def items(self) -> List[Tuple[Exponent, GaussianRational]]:
        cap = self.cap
        out = []
        for exps, coef in self.body.items():
            laurent = tuple(e - s for e, s in zip(exps, self.shift))
            if sum(laurent) <= cap:
                out.append((laurent, coef))
        return out

    def coef(self, exps: Sequence[int]) -> GaussianRational:
        exps = tuple(exps)
        if sum(exps) > self.cap:
            raise SeriesError(f"Coefficient {exps} lies beyond cap {self.cap}")
        body_exps = tuple(e + s for e, s in zip(exps, self.shift))
        if min(body_exps, default=0) < 0:
            return ZERO
        return self.body.terms.get(body_exps, ZERO)

    def is_zero(self) -> bool:
        return not self.items()

    def has_negative_exponents(self) -> bool:
        return any(min(e, default=0) < 0 for e, _ in self.items())

    def to_series(self) -> TruncatedSeries:
        """Drop the prefactor; fails when negative exponents are present"""
        reduced = self._reduced()
        if reduced.has_negative_exponents():
            raise SeriesError(f"Laurent series has negative exponents: {reduced}")
        return TruncatedSeries(self.variables, reduced.cap, dict(reduced.items()), _trusted=True)

    def __add__(self, other):
        if isinstance(other, TruncatedSeries):
            other = LaurentSeries(other)
        if not isinstance(other, LaurentSeries):
            return self + LaurentSeries(TruncatedSeries.constant(other, self.variables, max(self.cap, 0)))
        if self.variables != other.variables:
            raise SeriesError(f"Variable mismatch: {self.variables} vs {other.variables}")
        shift = tuple(max(a, b) for a, b in zip(self.shift, other.shift))
        cap = min(self.cap, other.cap)
        body = (self._with_shift(shift) + other._with_shift(shift)).with_cap(cap + sum(shift))
        return LaurentSeries(body, shift)._reduced()

    __radd__ = __add__

    def __neg__(self):
        return LaurentSeries(-self.body, self.shift)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, factor) -> "LaurentSeries":
        return LaurentSeries(self.body.scale(factor), self.shift)

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            other = LaurentSeries(other)
        if not isinstance(other, LaurentSeries):
            return self.scale(other)
        if self.variables != other.variables:
            raise SeriesError(f"Variable mismatch: {self.variables} vs {other.variables}")
        cap = min(self.cap - sum(other.shift), other.cap - sum(self.shift))
        shift = tuple(a + b for a, b in zip(self.shift, other.shift))
        body_cap = cap + sum(shift)
        if body_cap < sum(shift):
            raise SeriesError("Laurent product leaves no known coefficients")
        body = TruncatedSeries(self.variables, body_cap,
                               _mul_terms(self.body.terms, other.body.terms, body_cap),
                               _trusted=True)
        return LaurentSeries(body, shift)._reduced()

    __rmul__ = __mul__

    def with_cap(self, cap: int) -> "LaurentSeries":
        if cap > self.cap:
            raise SeriesError(f"Cannot raise cap from {self.cap} to {cap}")
        return LaurentSeries(self.body.with_cap(cap + sum(self.shift)), self.shift)

    def embed(self, variables: Sequence[str]) -> "LaurentSeries":
        variables = tuple(variables)
        body = self.body.embed(variables)
        shift = [0] * len(variables)
        for name, s in zip(self.variables, self.shift):
            shift[variables.index(name)] = s
        return LaurentSeries(body, shift)

    def agrees_with(self, other: "LaurentSeries") -> bool:
        if isinstance(other, TruncatedSeries):
            other = LaurentSeries(other)
        if self.variables != other.variables:
            raise SeriesError(f"Variable mismatch: {self.variables} vs {other.variables}")
        cap = min(self.cap, other.cap)
        mine = {e: c for e, c in self.items() if sum(e) <= cap}
        theirs = {e: c for e, c in other.items() if sum(e) <= cap}
        return mine == theirs

    def __eq__(self, other):
        if isinstance(other, TruncatedSeries):
            other = LaurentSeries(other)
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return (self.variables == other.variables and self.cap == other.cap
                and dict(self.items()) == dict(other.items()))

    def __hash__(self):
        return hash((self.variables, self.cap, frozenset(self.items())))

    def __str__(self):
        return _render(self.variables, self.items())

    def __repr__(self):
        return f"LaurentSeries({self.variables}, cap={self.cap}, {self})"


def _proportional(numerator: Form, denominator: Form) -> Optional[Fraction]:
    """c with numerator = c * denominator, or None"""
    if len(numerator) != len(denominator) or not denominator:
        return None
    ratio = None
    for (n1, c1), (n2, c2) in zip(numerator, denominator):
        if n1 != n2:
            return None
        r = Fraction(c1, c2)
        if ratio is None:
            ratio = r
        elif r != ratio:
            return None
    return ratio


def varsigma_product(numerators: Sequence[Form], denominators: Sequence[Form],
                     variables: Sequence[str], cap: int) -> LaurentSeries:
    """prod varsigma(N) / prod varsigma(D) as a Laurent series to total degree cap

    Each denominator is paired with a proportional numerator,
    varsigma(cL)/varsigma(L) = c S(cL)/S(L); unpaired single-variable
    denominators become the explicit prefactor 1/(c z) * 1/S(cz).
    """
    return _varsigma_product(tuple(sorted(canonical_form(f) for f in numerators)),
                             tuple(sorted(canonical_form(f) for f in denominators)),
                             tuple(variables), cap)


@lru_cache(maxsize=16384)
def _varsigma_product(numerators: Tuple[Form, ...], denominators: Tuple[Form, ...],
                      variables: Tuple[str, ...], cap: int) -> LaurentSeries:
    nums = list(numerators)
    dens = list(denominators)
    if any(form_is_zero(f) for f in dens):
        raise SeriesError("varsigma at the zero linear form in a denominator")
    if any(form_is_zero(f) for f in nums):
        return LaurentSeries.zero(variables, cap)

    scalar = Fraction(1)
    factors: List[Tuple[str, Form]] = []
    shift = [0] * len(variables)
    for den in dens:
        match = None
        for idx, num in enumerate(nums):
            ratio = _proportional(num, den)
            if ratio is not None:
                match = (idx, ratio)
                break
        if match is not None:
            idx, ratio = match
            num = nums.pop(idx)
            scalar *= ratio
            factors.append(('S', num))
            factors.append(('invS', den))
        elif len(den) == 1:
            name, c = den[0]
            if name not in variables:
                raise SeriesError(f"Denominator uses undeclared variable {name!r}")
            shift[variables.index(name)] += 1
            scalar /= c
            factors.append(('invS', den))
        else:
            raise SeriesError(f"Unresolvable denominator varsigma({den})")
    factors.extend(('varsigma', num) for num in nums)

    body_cap = cap + sum(shift)
    if body_cap < 0:
        return LaurentSeries.zero(variables, cap)
    body = TruncatedSeries.constant(scalar, variables, body_cap)
    for kind, form in factors:
        body = body * series_of_form(kind, form, variables, body_cap)
    return LaurentSeries(body, shift)._reduced()


class MultiPoly:
    """Exact polynomial in named variables"""

    __slots__ = ('variables', 'terms')

    def __init__(self, variables: Sequence[str], terms: Optional[Dict[Exponent, object]] = None):
        self.variables = tuple(variables)
        clean = {}
        for exps, coef in (terms or {}).items():
            exps = tuple(exps)
            if len(exps) != len(self.variables) or any(e < 0 for e in exps):
                raise SeriesError(f"Bad exponent vector {exps} for variables {self.variables}")
            coef = as_gaussian(coef)
            if coef:
                clean[exps] = clean[exps] + coef if exps in clean else coef
        self.terms = _drop_zeros(clean)

    @classmethod
    def constant(cls, value, variables: Sequence[str]) -> "MultiPoly":
        return cls(variables, {(0,) * len(tuple(variables)): value})

    @classmethod
    def variable(cls, name: str, variables: Sequence[str]) -> "MultiPoly":
        variables = tuple(variables)
        return cls(variables, {tuple(1 if v == name else 0 for v in variables): 1})

    @classmethod
    def from_series(cls, series: TruncatedSeries) -> "MultiPoly":
        return cls(series.variables, series.terms)

    def to_series(self, cap: int) -> TruncatedSeries:
        return TruncatedSeries(self.variables, cap, self.terms)

    def coef(self, exps: Sequence[int]) -> GaussianRational:
        return self.terms.get(tuple(exps), ZERO)

    def multilinear_coef(self) -> GaussianRational:
        return self.coef((1,) * len(self.variables))

    def total_degree(self) -> int:
        """Largest total degree, -1 for the zero polynomial"""
        return max((sum(e) for e in self.terms), default=-1)

    def is_parity(self, parity: int) -> bool:
        return all(sum(e) % 2 == parity % 2 for e in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def evaluate(self, point: Sequence) -> GaussianRational:
        point = [as_gaussian(x) for x in point]
        total = ZERO
        for exps, coef in self.terms.items():
            value = coef
            for x, e in zip(point, exps):
                if e:
                    value = value * x ** e
            total = total + value
        return total

    def __add__(self, other):
        if not isinstance(other, MultiPoly):
            other = MultiPoly.constant(other, self.variables)
        if other.variables != self.variables:
            raise SeriesError(f"Variable mismatch: {self.variables} vs {other.variables}")
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out[e] + c if e in out else c
        return MultiPoly(self.variables, out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.variables, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            factor = as_gaussian(other)
            return MultiPoly(self.variables, {e: c * factor for e, c in self.terms.items()})
        if other.variables != self.variables:
            raise SeriesError(f"Variable mismatch: {self.variables} vs {other.variables}")
        out: Dict[Exponent, GaussianRational] = {}
        for ea, ca in self.terms.items():
            for eb, cb in other.terms.items():
                key = tuple(x + y for x, y in zip(ea, eb))
                out[key] = out[key] + ca * cb if key in out else ca * cb
        return MultiPoly(self.variables, out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "MultiPoly":
        result = MultiPoly.constant(ONE, self.variables)
        for _ in range(n):
            result = result * self
        return result

    def __eq__(self, other):
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.variables == other.variables and self.terms == other.terms

    def __hash__(self):
        return hash((self.variables, frozenset(self.terms.items())))

    def items(self):
        return sorted(self.terms.items(), key=lambda item: _sort_key(item[0]))

    def __str__(self):
        return _render(self.variables, self.items())

    def __repr__(self):
        return f"MultiPoly({self.variables}, {self})"
