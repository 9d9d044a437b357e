"""
Exact arithmetic: rationals, Gaussian rationals, factorials and powers of i
"""

import logging
import re
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Union

logger = logging.getLogger(__name__)

# Canonical rational type. Fraction keeps the sign in the numerator and
# reduces on construction, so equal values hash equal.
Rational = Fraction

Number = Union[int, Fraction, "GaussianRational"]


class ParseError(ValueError):
    """Raised when text does not follow the exact number grammar"""


class GaussianRational:
    """Exact complex number re + im*i with rational parts"""

    __slots__ = ('re', 'im')

    def __init__(self, re_part=0, im_part=0):
        _set = object.__setattr__
        _set(self, 're', re_part if type(re_part) is Fraction else Fraction(re_part))
        _set(self, 'im', im_part if type(im_part) is Fraction else Fraction(im_part))

    @classmethod
    def coerce(cls, value) -> "GaussianRational":
        """Promote int/Fraction to GaussianRational"""
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, (int, Fraction)):
            return cls(value, 0)
        raise TypeError(f"Cannot convert {type(value).__name__} to GaussianRational")

    def __setattr__(self, name, value):
        raise AttributeError("GaussianRational is immutable")

    def __repr__(self):
        return f"GaussianRational({format_gaussian(self)!r})"

    def __str__(self):
        return format_gaussian(self)

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    def __eq__(self, other):
        if isinstance(other, GaussianRational):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return not self.im and self.re == other
        return NotImplemented

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, GaussianRational):
            return GaussianRational(self.re + other.re, self.im + other.im)
        if isinstance(other, (int, Fraction)):
            return GaussianRational(self.re + other, self.im)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, GaussianRational):
            return GaussianRational(self.re - other.re, self.im - other.im)
        if isinstance(other, (int, Fraction)):
            return GaussianRational(self.re - other, self.im)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, (int, Fraction)):
            return GaussianRational(other - self.re, -self.im)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, GaussianRational):
            if not self.im and not other.im:
                return GaussianRational(self.re * other.re, 0)
            return GaussianRational(self.re * other.re - self.im * other.im,
                                    self.re * other.im + self.im * other.re)
        if isinstance(other, (int, Fraction)):
            return GaussianRational(self.re * other, self.im * other)
        return NotImplemented

    __rmul__ = __mul__

    def norm(self) -> Fraction:
        """Squared absolute value"""
        return self.re * self.re + self.im * self.im

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def inverse(self) -> "GaussianRational":
        """Multiplicative inverse of a nonzero element"""
        n = self.norm()
        if not n:
            raise ZeroDivisionError("GaussianRational division by zero")
        return GaussianRational(self.re / n, -self.im / n)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                raise ZeroDivisionError("GaussianRational division by zero")
            return GaussianRational(self.re / other, self.im / other)
        if isinstance(other, GaussianRational):
            return self * other.inverse()
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return GaussianRational(other) * self.inverse()
        return NotImplemented

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result = ONE
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def is_real(self) -> bool:
        return not self.im

    def real_value(self) -> Fraction:
        """Return the value as a Fraction, refusing non-real numbers"""
        if self.im:
            raise ValueError(f"{format_gaussian(self)} is not real")
        return self.re


ZERO = GaussianRational(0, 0)
ONE = GaussianRational(1, 0)
I = GaussianRational(0, 1)

_I_POWERS = (ONE, I, -ONE, -I)


def ipow(n: int) -> GaussianRational:
    """Return i**n for any integer n"""
    return _I_POWERS[n % 4]


def binomial(n: int, k: int) -> Fraction:
    """n choose k, zero outside 0 <= k <= n"""
    if n < 0:
        raise ValueError(f"binomial needs n >= 0, got {n}")
    if k < 0 or k > n:
        return Fraction(0)
    return Fraction(comb(n, k))


@lru_cache(maxsize=None)
def factorial(n: int) -> int:
    if n < 0:
        raise ValueError(f"factorial of negative number {n}")
    return 1 if n < 2 else n * factorial(n - 1)


def falling_factorial(n: int, k: int) -> int:
    """n (n-1) ... (n-k+1)"""
    result = 1
    for j in range(k):
        result *= n - j
    return result


def as_gaussian(value) -> GaussianRational:
    return GaussianRational.coerce(value)


# Textual grammar: "p/q" for rationals, "p/q+r/s*i" for Gaussian rationals,
# zero parts omitted, "/q" omitted when q = 1.

_RATIONAL_RE = re.compile(r'^[+-]?\d+(/\d+)?$')
_GAUSSIAN_RE = re.compile(
    r'^(?:(?P<re>[+-]?\d+(?:/\d+)?)(?=$|[+-]))?'
    r'(?:(?P<im>[+-]?\d+(?:/\d+)?)\*i)?$')


def format_rational(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def format_gaussian(value) -> str:
    value = as_gaussian(value)
    if not value.im:
        return format_rational(value.re)
    im_text = f"{format_rational(value.im)}*i"
    if not value.re:
        return im_text
    sign = '' if value.im < 0 else '+'
    return f"{format_rational(value.re)}{sign}{im_text}"


def parse_rational(text: str) -> Fraction:
    """Parse "p/q" or "p" into a Fraction"""
    text = text.strip()
    if not _RATIONAL_RE.match(text):
        raise ParseError(f"Malformed rational: {text!r}")
    if '/' in text:
        num, den = text.split('/')
        if int(den) == 0:
            raise ParseError(f"Zero denominator in {text!r}")
        return Fraction(int(num), int(den))
    return Fraction(int(text))


def parse_gaussian(text: str) -> GaussianRational:
    """Parse "p/q", "r/s*i" or "p/q+r/s*i" into a GaussianRational"""
    stripped = text.strip()
    match = _GAUSSIAN_RE.match(stripped)
    if not stripped or not match or (match.group('re') is None and match.group('im') is None):
        raise ParseError(f"Malformed Gaussian rational: {text!r}")
    re_part = parse_rational(match.group('re')) if match.group('re') else Fraction(0)
    im_part = parse_rational(match.group('im')) if match.group('im') else Fraction(0)
    return GaussianRational(re_part, im_part)
