"""
Closed formulas: purely quantum intersection numbers, one-part double
Hurwitz numbers and a brute-force Hurwitz count over the symmetric group
"""

import itertools
import logging
from fractions import Fraction
from functools import lru_cache
from math import prod
from typing import Dict, List, Optional, Sequence, Tuple

from exact_arith import factorial
from gw import Profile
from series import MultiPoly, s_series

logger = logging.getLogger(__name__)

# Marked-preimage conventions for the brute-force count: which sides of
# the cover carry the |Aut| labeling factor.
CONVENTION_BOTH = 'both'
CONVENTION_INFINITY_ONLY = 'infinity-only'
CONVENTION_ZERO_ONLY = 'zero-only'
CONVENTION_NONE = 'none'
CONVENTIONS = (CONVENTION_BOTH, CONVENTION_INFINITY_ONLY, CONVENTION_ZERO_ONLY, CONVENTION_NONE)

DEFAULT_HURWITZ_DEGREE = 6


class PreconditionError(ValueError):
    """Raised when a closed formula is called outside its range of validity"""


class CorrelatorKey:
    """Index of a quantum intersection number <tau_d1 ... tau_dn>_{l, h}"""

    __slots__ = ('d', 'l', 'h')

    def __init__(self, d: Sequence[int], l: int = 0, h: int = 0):
        d = tuple(int(x) for x in d)
        if any(x < 0 for x in d) or l < 0 or h < 0:
            raise PreconditionError(f"Correlator indices must be non-negative: d={d}, l={l}, h={h}")
        self.d = d
        self.l = l
        self.h = h

    @property
    def g(self) -> int:
        return self.l + self.h

    @property
    def n(self) -> int:
        return len(self.d)

    @property
    def k(self) -> int:
        return sum(self.d) - 2 * self.g + self.l + 1

    def passes_selection_rule(self) -> bool:
        """sum d = n - l + 1 mod 2, necessary for a nonzero value"""
        return (sum(self.d) - self.n + self.l - 1) % 2 == 0

    def sorted(self) -> "CorrelatorKey":
        return CorrelatorKey(sorted(self.d), self.l, self.h)

    def _key(self):
        return (self.d, self.l, self.h)

    def __eq__(self, other):
        return isinstance(other, CorrelatorKey) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __lt__(self, other):
        return (self.g, self.n, self.d, self.l) < (other.g, other.n, other.d, other.l)

    def __str__(self):
        taus = ' '.join(f"tau{x}" for x in self.d)
        return f"<{taus}>_{{{self.l},{self.h}}}"

    def __repr__(self):
        return f"CorrelatorKey({self.d}, l={self.l}, h={self.h})"


@lru_cache(maxsize=None)
def _s_coefficients(genus: int) -> Tuple[Fraction, ...]:
    """Coefficients of z^(2j) in S(z), j = 0..genus"""
    series = s_series('z', 2 * genus)
    return tuple(series.coef((2 * j,)).real_value() for j in range(genus + 1))


@lru_cache(maxsize=None)
def _inverse_s_coefficients(genus: int) -> Tuple[Fraction, ...]:
    """Coefficients of z^(2j) in 1/S(z), j = 0..genus"""
    series = s_series('z', 2 * genus).reciprocal()
    return tuple(series.coef((2 * j,)).real_value() for j in range(genus + 1))


def _weak_compositions(total: int, parts: int):
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(total + 1):
        for rest in _weak_compositions(total - first, parts - 1):
            yield (first,) + rest


def hurwitz_series_coefficient(mus: Sequence[str], genus: int) -> MultiPoly:
    """Coef_{z^(2g)} prod_j S(mu_j z) / S(z) as a polynomial in the mu variables"""
    s = _s_coefficients(genus)
    inv = _inverse_s_coefficients(genus)
    n = len(mus)
    terms: Dict[Tuple[int, ...], Fraction] = {}
    for split in _weak_compositions(genus, n + 1):
        weight = inv[split[0]] * prod(s[j] for j in split[1:])
        exps = tuple(2 * j for j in split[1:])
        terms[exps] = terms.get(exps, Fraction(0)) + weight
    return MultiPoly(mus, terms)


def _check_purely_quantum(d: Sequence[int], g: int):
    n = len(d)
    if g < 0 or any(x < 0 for x in d):
        raise PreconditionError(f"Need g >= 0 and d >= 0, got g={g}, d={tuple(d)}")
    if n < 1 + 2 * (g == 0):
        raise PreconditionError(f"Closed formula needs n >= 1 + 2 delta_(g,0); got n={n}, g={g}")
    if 2 * g - 3 + n < 0:
        raise PreconditionError(f"Closed formula needs 2g - 3 + n >= 0; got n={n}, g={g}")


def purely_quantum(d: Sequence[int], g: int) -> Fraction:
    """<tau_d1 ... tau_dn>_{0,g} from (sum mu)^(2g-3+n) Coef_{z^2g} prod S(mu_j z)/S(z)"""
    d = tuple(d)
    _check_purely_quantum(d, g)
    return _purely_quantum(tuple(sorted(d)), g)


@lru_cache(maxsize=4096)
def _purely_quantum(d: Tuple[int, ...], g: int) -> Fraction:
    n = len(d)
    top = 4 * g - 3 + n
    if sum(d) > top or (top - sum(d)) % 2:
        return Fraction(0)
    mus = tuple(f"mu{j}" for j in range(1, n + 1))
    total = MultiPoly(mus, {tuple(1 if i == j else 0 for i in range(n)): 1 for j in range(n)})
    poly = hurwitz_series_coefficient(mus, g) * (total ** (2 * g - 3 + n))
    return poly.coef(d).real_value()


def gjv_hurwitz(g: int, mu: Profile) -> Fraction:
    """One-part double Hurwitz number r! |mu|^(r-1) Coef_{z^2g} prod S(mu_j z)/S(z)"""
    mu = mu if isinstance(mu, Profile) else Profile(mu)
    n = len(mu)
    if n < 1 or g < 0:
        raise PreconditionError(f"gjv_hurwitz needs g >= 0 and a nonempty profile, got g={g}, mu={mu.parts}")
    r = 2 * g - 1 + n
    s = _s_coefficients(g)
    inv = _inverse_s_coefficients(g)
    coefficient = Fraction(0)
    for split in _weak_compositions(g, n + 1):
        coefficient += inv[split[0]] * prod(s[j] * m ** (2 * j) for j, m in zip(split[1:], mu.parts))
    return factorial(r) * Fraction(mu.total) ** (r - 1) * coefficient


def k0_branch(g: int) -> Fraction:
    """Coef_{z^2g} 1/S(z), the one-point value of the k = 0 branch at l = 0"""
    if g < 1:
        raise PreconditionError(f"k0_branch needs g >= 1, got {g}")
    return _inverse_s_coefficients(g)[g]


# --- brute force over the symmetric group ------------------------------------

Permutation = Tuple[int, ...]


def cycle_type(perm: Permutation) -> Tuple[int, ...]:
    """Cycle lengths in decreasing order"""
    seen = [False] * len(perm)
    lengths = []
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        x = start
        while not seen[x]:
            seen[x] = True
            x = perm[x]
            length += 1
        lengths.append(length)
    return tuple(sorted(lengths, reverse=True))


def _representative(profile: Sequence[int]) -> Permutation:
    """A permutation of the given cycle type on consecutive blocks"""
    perm = []
    start = 0
    for part in profile:
        block = list(range(start, start + part))
        perm.extend(block[1:] + block[:1])
        start += part
    return tuple(perm)


def _centralizer_order(profile: Sequence[int]) -> int:
    out = 1
    for part in set(profile):
        count = list(profile).count(part)
        out *= part ** count * factorial(count)
    return out


def _components_of(perm: Permutation) -> Tuple[int, ...]:
    """label[x] = smallest element of the cycle through x"""
    labels = list(range(len(perm)))
    for start in range(len(perm)):
        x = perm[start]
        smallest = start
        while x != start:
            smallest = min(smallest, x)
            x = perm[x]
        labels[start] = smallest
    return tuple(labels)


def _merge(labels: Tuple[int, ...], a: int, b: int) -> Tuple[int, ...]:
    la, lb = labels[a], labels[b]
    if la == lb:
        return labels
    low, high = min(la, lb), max(la, lb)
    return tuple(low if x == high else x for x in labels)


@lru_cache(maxsize=256)
def _factorization_count(mu: Tuple[int, ...], nu: Tuple[int, ...], r: int) -> int:
    """#(sigma, tau_1..tau_r): sigma of type mu, tau_i transpositions,
    sigma tau_1 ... tau_r of type nu, generating a transitive subgroup"""
    d = sum(mu)
    sigma = _representative(mu)
    transpositions = list(itertools.combinations(range(d), 2))
    states: Dict[Tuple[Permutation, Tuple[int, ...]], int] = {(sigma, _components_of(sigma)): 1}
    for _ in range(r):
        following: Dict[Tuple[Permutation, Tuple[int, ...]], int] = {}
        for (perm, labels), count in states.items():
            for a, b in transpositions:
                # right multiplication by (a b) swaps the images of a and b
                swapped = list(perm)
                swapped[a], swapped[b] = swapped[b], swapped[a]
                key = (tuple(swapped), _merge(labels, a, b))
                following[key] = following.get(key, 0) + count
        states = following
    target = tuple(sorted(nu, reverse=True))
    per_sigma = sum(count for (perm, labels), count in states.items()
                    if not any(labels) and cycle_type(perm) == target)
    class_size = factorial(d) // _centralizer_order(mu)
    return per_sigma * class_size


def labeling_factor(mu: Profile, nu: Profile, convention: str) -> int:
    if convention == CONVENTION_BOTH:
        return mu.aut_order() * nu.aut_order()
    if convention == CONVENTION_INFINITY_ONLY:
        return nu.aut_order()
    if convention == CONVENTION_ZERO_ONLY:
        return mu.aut_order()
    if convention == CONVENTION_NONE:
        return 1
    raise PreconditionError(f"Unknown labeling convention {convention!r}")


def hurwitz_oracle(g: int, mu: Profile, nu: Profile, convention: str = CONVENTION_BOTH,
                   max_degree: int = DEFAULT_HURWITZ_DEGREE) -> Fraction:
    """Double Hurwitz number by counting factorizations in S_d, with marked preimages"""
    mu = mu if isinstance(mu, Profile) else Profile(mu)
    nu = nu if isinstance(nu, Profile) else Profile(nu)
    d = mu.total
    if nu.total != d:
        raise PreconditionError(f"Profiles {mu.parts} and {nu.parts} have different degrees")
    if d > max_degree:
        raise PreconditionError(f"Degree {d} exceeds the brute-force bound {max_degree}")
    r = 2 * g - 2 + len(mu) + len(nu)
    if r < 0:
        return Fraction(0)
    raw = Fraction(_factorization_count(tuple(sorted(mu.parts, reverse=True)),
                                        tuple(sorted(nu.parts, reverse=True)), r), factorial(d))
    return raw * labeling_factor(mu, nu, convention)


def partitions(d: int, largest: Optional[int] = None):
    """Partitions of d in decreasing order"""
    largest = d if largest is None else largest
    if d == 0:
        yield ()
        return
    for first in range(min(d, largest), 0, -1):
        for rest in partitions(d - first, first):
            yield (first,) + rest


def labeling_convention(max_degree: int = 5, max_genus: int = 1) -> Dict:
    """Pin the marked-preimage convention against the one-part closed formula

    Every convention is tried on all cases (g, (d), nu) with d <= max_degree;
    the first one that fits every case is chosen.
    """
    fitting = list(CONVENTIONS)
    cases = 0
    for g in range(max_genus + 1):
        for d in range(1, max_degree + 1):
            for nu in partitions(d):
                expected = gjv_hurwitz(g, Profile(nu))
                counts = {c: hurwitz_oracle(g, Profile([d]), Profile(nu), c, max_degree) for c in fitting}
                fitting = [c for c in fitting if counts[c] == expected]
                cases += 1
    chosen = fitting[0] if fitting else None
    if chosen is None:
        logger.error(f"No labeling convention fits the one-part closed formula ({cases} cases)")
    else:
        logger.info(f"Labeling convention {chosen!r} fits {cases} cases; all fitting: {fitting}")
    return {'success': chosen is not None, 'convention': chosen, 'fitting': fitting, 'cases': cases}


def hurwitz_table(max_genus: int, max_degree: int, with_oracle: bool = False,
                  oracle_degree: int = DEFAULT_HURWITZ_DEGREE) -> List[Dict]:
    """Rows (g, mu, value) of one-part double Hurwitz numbers for every partition mu"""
    rows = []
    for g in range(max_genus + 1):
        for d in range(1, max_degree + 1):
            for mu in partitions(d):
                row = {'g': g, 'mu': mu, 'value': gjv_hurwitz(g, Profile(mu))}
                if with_oracle and d <= oracle_degree:
                    row['oracle'] = hurwitz_oracle(g, Profile([d]), Profile(mu), max_degree=oracle_degree)
                rows.append(row)
    return rows


# --- string equation consequences --------------------------------------------

def string_image(d: Sequence[int], g: int) -> Fraction:
    """Right side of the string equation for <tau_0 tau_d1 ... tau_dn>_{0,g}"""
    d = tuple(d)
    if g == 0 and sorted(d) == [0, 0]:
        return Fraction(1)
    if g == 1 and not d:
        return k0_branch(1)
    total = Fraction(0)
    for j, dj in enumerate(d):
        if dj == 0:
            continue
        lowered = d[:j] + (dj - 1,) + d[j + 1:]
        try:
            _check_purely_quantum(lowered, g)
        except PreconditionError:
            continue
        total += purely_quantum(lowered, g)
    return total


def tau0_generating_identity(n: int, genus_cap: int) -> Dict:
    """Compare sum <tau_0 tau_d>_{0,g} mu^d with (sum mu)^(2g+n-2) Coef_{z^2g} prod S(mu_i z)/S(z)"""
    if n < 2:
        raise PreconditionError(f"tau0 generating identity needs n >= 2, got {n}")
    mus = tuple(f"mu{j}" for j in range(1, n + 1))
    linear = MultiPoly(mus, {tuple(1 if i == j else 0 for i in range(n)): 1 for j in range(n)})
    mismatches = []
    checks = 0
    for g in range(genus_cap + 1):
        rhs = hurwitz_series_coefficient(mus, g) * (linear ** (2 * g + n - 2))
        lhs_terms = {}
        top = 4 * g - 2 + n
        for size in range(top % 2, top + 1, 2):
            for d in _weak_compositions(size, n):
                value = purely_quantum((0,) + d, g)
                if value:
                    lhs_terms[d] = value
        lhs = MultiPoly(mus, lhs_terms)
        checks += 1
        if lhs != rhs:
            mismatches.append({'g': g, 'lhs': str(lhs), 'rhs': str(rhs)})
    return {'success': not mismatches, 'checks': checks, 'mismatches': mismatches}
