"""
Stationary relative invariants of (CP^1, 0, infinity): generating series
from the infinite wedge, connected parts, closed forms and polynomial
recovery in the ramification parameters
"""

import itertools
import logging
from fractions import Fraction
from functools import lru_cache
from math import prod
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from exact_arith import ZERO, GaussianRational, factorial
from series import (LaurentSeries, MultiPoly, TruncatedSeries, compose, series_of_form,
                    varsigma, varsigma_product)
from wedge import LinearForm, WedgeGenerator, WedgeWord, vev

logger = logging.getLogger(__name__)


class ProfileError(ValueError):
    """Raised for invalid ramification profiles"""


class InterpolationError(RuntimeError):
    """Raised when polynomial recovery fails validation or exceeds its budget"""


class Profile:
    """Labeled ramification profile; order of parts is significant"""

    __slots__ = ('parts',)

    def __init__(self, parts: Sequence[int]):
        parts = tuple(int(p) for p in parts)
        if any(p < 1 for p in parts):
            raise ProfileError(f"Profile parts must be positive, got {parts}")
        self.parts = parts

    @property
    def total(self) -> int:
        """A = sum of the parts"""
        return sum(self.parts)

    def sub(self, indices: Sequence[int]) -> "Profile":
        """a_I for a set of positions I"""
        return Profile(self.parts[i] for i in indices)

    def aut_order(self) -> int:
        """Product over part multiplicities of their factorials"""
        out = 1
        for part in set(self.parts):
            out *= factorial(self.parts.count(part))
        return out

    def __len__(self):
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __eq__(self, other):
        return isinstance(other, Profile) and self.parts == other.parts

    def __hash__(self):
        return hash(self.parts)

    def __repr__(self):
        return f"Profile{self.parts}"


def z_variables(n: int) -> Tuple[str, ...]:
    return tuple(f"z{i}" for i in range(1, n + 1))


def genus_of(mu_length: int, nu_length: int, degrees: Sequence[int]) -> Optional[int]:
    """g with 2g - 2 + l(mu) + l(nu) = sum d, or None"""
    twice = sum(degrees) + 2 - mu_length - nu_length
    if twice < 0 or twice % 2:
        return None
    return twice // 2


class GwSeries:
    """Generating series sum <mu, prod tau_{d_i}(omega), nu> z^(d+1)"""

    __slots__ = ('mu', 'nu', 'n', 'connected', 'series')

    def __init__(self, mu: Profile, nu: Profile, n: int, connected: bool, series: LaurentSeries):
        self.mu = mu
        self.nu = nu
        self.n = n
        self.connected = connected
        self.series = series

    @property
    def cap(self) -> int:
        return self.series.cap

    def invariant(self, degrees: Sequence[int]) -> GaussianRational:
        """Coefficient of z_1^(d_1+1) ... z_n^(d_n+1)"""
        if len(degrees) != self.n:
            raise ProfileError(f"Expected {self.n} degrees, got {len(degrees)}")
        if self.connected and any(d < 0 for d in degrees):
            raise ProfileError("Connected invariants need d >= 0")
        return self.series.coef(tuple(d + 1 for d in degrees))

    def __repr__(self):
        kind = 'connected' if self.connected else 'disconnected'
        return f"GwSeries({self.mu}, {self.nu}, n={self.n}, {kind}, {self.series})"


def _check_one_part(A: int, a: Profile):
    if len(a) < 1:
        raise ProfileError("Need at least one part over infinity")
    if A != a.total:
        raise ProfileError(f"A = {A} differs from the sum {a.total} of {a.parts}")


def _wedge_series(mu: Profile, nu: Profile, variables: Sequence[str],
                  active: Sequence[str], cap: int) -> LaurentSeries:
    """(1/(prod mu prod nu)) <prod alpha_mu prod E_0(z) prod alpha_{-nu}>"""
    word = WedgeWord([WedgeGenerator.alpha(m) for m in mu]
                     + [WedgeGenerator.e(0, LinearForm.var(z)) for z in active]
                     + [WedgeGenerator.alpha(-v) for v in nu])
    norm = Fraction(1, prod(mu.parts) * prod(nu.parts))
    return vev(word, variables, cap).scale(norm)


def disconnected_series(A: int, a: Profile, n: int, cap: int) -> GwSeries:
    """F^bullet_{A,a}(z_1..z_n) from the wedge"""
    a = a if isinstance(a, Profile) else Profile(a)
    _check_one_part(A, a)
    if n < 1:
        raise ProfileError(f"Need n >= 1 insertions, got {n}")
    variables = z_variables(n)
    series = _wedge_series(Profile([A]), a, variables, variables, cap)
    return GwSeries(Profile([A]), a, n, False, series)


def _subsets(items: Sequence[int]):
    for size in range(len(items) + 1):
        yield from itertools.combinations(items, size)


def _inverse_varsigmas(names: Sequence[str], variables: Sequence[str], cap: int) -> LaurentSeries:
    return varsigma_product([], [((z, 1),) for z in names], variables, cap)


def connected_family(A: int, a: Profile, n: int, cap: int) -> Dict[Tuple[int, ...], LaurentSeries]:
    """F^circ_{A,a}(z_S) for every subset S of [n], each valid to cap

    F°(z_S) = F•(z_S) - sum over nonempty J in S of F°(z_{S-J}) / prod_J varsigma(z_j),
    seeded by F°() = 1/a_1 for one part and 0 otherwise.
    """
    a = a if isinstance(a, Profile) else Profile(a)
    _check_one_part(A, a)
    variables = z_variables(n)
    indices = tuple(range(n))
    base = Fraction(1, a.parts[0]) if len(a) == 1 else Fraction(0)
    family: Dict[Tuple[int, ...], LaurentSeries] = {}
    for subset in _subsets(indices):
        # dividing by |J| varsigmas lowers the degree by |J|
        local_cap = cap + n - len(subset)
        if not subset:
            family[subset] = LaurentSeries(TruncatedSeries.constant(base, variables, local_cap))
            continue
        active = [variables[i] for i in subset]
        total = _wedge_series(Profile([A]), a, variables, active, local_cap)
        for removed in _subsets(subset):
            if not removed:
                continue
            rest = tuple(i for i in subset if i not in removed)
            denom = _inverse_varsigmas([variables[i] for i in removed], variables,
                                       local_cap + len(rest) + len(removed))
            total = total - family[rest] * denom
        family[subset] = total.with_cap(local_cap) if total.cap > local_cap else total
    return family


def connected_from_disconnected(A: int, a: Profile, n: int, cap: int) -> GwSeries:
    """F^circ_{A,a}(z_1..z_n) by the triangular subset recursion"""
    a = a if isinstance(a, Profile) else Profile(a)
    if n == 0:
        _check_one_part(A, a)
        base = Fraction(1, a.parts[0]) if len(a) == 1 else Fraction(0)
        return GwSeries(Profile([A]), a, 0, True, LaurentSeries(TruncatedSeries.constant(base, (), 0)))
    family = connected_family(A, a, n, cap)
    series = family[tuple(range(n))]
    if series.has_negative_exponents():
        raise InterpolationError(f"Connected series for A={A}, a={a.parts} has negative exponents")
    return GwSeries(Profile([A]), a, n, True, series)


def reassemble_disconnected(family: Dict[Tuple[int, ...], LaurentSeries], n: int, cap: int) -> LaurentSeries:
    """sum over J of F°(z_{J^c}) / prod_J varsigma(z_j)"""
    variables = z_variables(n)
    full = tuple(range(n))
    total = LaurentSeries.zero(variables, cap)
    for removed in _subsets(full):
        rest = tuple(i for i in full if i not in removed)
        term = family[rest]
        if removed:
            term = term * _inverse_varsigmas([variables[i] for i in removed], variables,
                                             cap + n)
        total = total + term
    return total.with_cap(cap) if total.cap > cap else total


def polynomial_part(series: GwSeries) -> LaurentSeries:
    """F• minus its J = [n] summand F°()/prod varsigma(z_j)"""
    a = series.nu
    if len(a) != 1:
        return series.series
    variables = series.series.variables
    corner = _inverse_varsigmas(variables, variables, series.cap).scale(Fraction(1, a.parts[0]))
    return series.series - corner


def q_function(b: Sequence[int], zvars: Sequence[str], cap: int) -> TruncatedSeries:
    """Q(b_1..b_n; z_1..z_n) = prod_i varsigma((B - b_<i) z_i + b_i Z_<i) / varsigma(Z)"""
    zvars = tuple(zvars)
    if len(b) != len(zvars) or not zvars:
        raise ProfileError(f"q_function needs one b per variable, got {b} and {zvars}")
    B = sum(b)
    numerators = []
    spent = 0
    for i, (bi, z) in enumerate(zip(b, zvars)):
        form = LinearForm.var(z, B - spent) + LinearForm(tuple((w, bi) for w in zvars[:i]))
        numerators.append(form.coeffs)
        spent += bi
    denominator = LinearForm(tuple((z, 1) for z in zvars)).coeffs
    return varsigma_product(numerators, [denominator], zvars, cap).to_series()


@lru_cache(maxsize=None)
def _product_coefficient(zvars: Tuple[str, ...], power: int) -> TruncatedSeries:
    """Coef_{t^power} prod_i varsigma(z_i t), a homogeneous polynomial in z"""
    variables = zvars + ('t',)
    cap = 2 * power
    product = TruncatedSeries.one(variables, cap)
    for z in zvars:
        exps = tuple(1 if v in (z, 't') else 0 for v in variables)
        product = product * compose(varsigma('s', cap), TruncatedSeries(variables, cap, {exps: 1}))
    return product.coefficient_in('t', power).embed(zvars)


def _connected_closed(k: int, subset: Sequence[str], variables: Tuple[str, ...], cap: int) -> TruncatedSeries:
    """Z^(k-1) Coef_{t^(k+1)} prod varsigma(z_i t) / S(Z) over the given subset"""
    if not subset:
        return TruncatedSeries.zero(variables, cap)
    poly = _product_coefficient(tuple(subset), k + 1)
    core = TruncatedSeries(poly.variables, cap, poly.terms).embed(variables)
    if core.is_zero():
        return TruncatedSeries.zero(variables, cap)
    z_sum = LinearForm(tuple((z, 1) for z in subset)).coeffs
    result = core * series_of_form('invS', z_sum, variables, cap)
    if k >= 1:
        result = result * (TruncatedSeries.linear(z_sum, variables, cap) ** (k - 1))
    return result


def closed_multilinear_coef(k: int, zvars: Sequence[str], cap: int) -> Dict[str, LaurentSeries]:
    """Closed forms of (1/k!) Coef_{a_1..a_k} of F° ('connected') and of F• ('disconnected')"""
    if k < 1 or not zvars:
        raise ProfileError(f"closed forms need k >= 1 and n >= 1, got k={k}, n={len(zvars)}")
    variables = tuple(zvars)
    n = len(variables)
    connected = LaurentSeries(_connected_closed(k, variables, variables, cap))
    disconnected = LaurentSeries.zero(variables, cap)
    for removed in _subsets(tuple(range(n))):
        if len(removed) == n:
            continue
        rest = [variables[i] for i in range(n) if i not in removed]
        term = LaurentSeries(_connected_closed(k, rest, variables, cap + len(removed)))
        if removed:
            term = term * _inverse_varsigmas([variables[i] for i in removed], variables,
                                             cap + len(removed))
        disconnected = disconnected + term
    return {'connected': connected, 'disconnected': disconnected.with_cap(cap)
            if disconnected.cap > cap else disconnected}


# --- interpolation in the ramification parameters ---------------------------

def _lagrange_weights(nodes: Sequence[int]) -> List[List[Fraction]]:
    """W[e][i] = coefficient of x^e in the i-th Lagrange basis polynomial"""
    size = len(nodes)
    weights = [[Fraction(0)] * size for _ in range(size)]
    for i, xi in enumerate(nodes):
        poly = [Fraction(1)]
        denom = Fraction(1)
        for j, xj in enumerate(nodes):
            if j == i:
                continue
            poly = [Fraction(0)] + poly
            for e in range(len(poly) - 1):
                poly[e] -= xj * poly[e + 1]
            denom *= xi - xj
        for e, c in enumerate(poly):
            weights[e][i] = c / denom
    return weights


def _lagrange_values(nodes: Sequence[int], x: int) -> List[Fraction]:
    out = []
    for i, xi in enumerate(nodes):
        value = Fraction(1)
        for j, xj in enumerate(nodes):
            if j != i:
                value *= Fraction(x - xj, xi - xj)
        out.append(value)
    return out


def _multiplicity(point: Tuple[int, ...]) -> int:
    """Number of distinct orderings of a sorted tuple"""
    count = factorial(len(point))
    for value in set(point):
        count //= factorial(point.count(value))
    return count


def multilinear_series(evaluate: Callable[[Tuple[int, ...]], LaurentSeries], k: int, degree: int,
                       budget: int) -> LaurentSeries:
    """(1/k!) Coef_{a_1..a_k} of a symmetric polynomial-in-a family of series

    evaluate is called on sorted tuples of the grid {1..degree+1}^k and once on
    the held-out diagonal point (degree+2, ..., degree+2).
    """
    degree = max(degree, 1)
    nodes = list(range(1, degree + 2))
    points = list(itertools.combinations_with_replacement(nodes, k))
    if len(points) + 1 > budget:
        raise InterpolationError(f"Grid of {len(points)} points exceeds the evaluation budget {budget}")
    logger.debug(f"multilinear grid: k={k}, degree={degree}, {len(points)} evaluations")
    linear = _lagrange_weights(nodes)[1]
    held_out = degree + 2
    at_held_out = _lagrange_values(nodes, held_out)
    coefficient = None
    predicted = None
    for point in points:
        value = evaluate(point)
        mult = _multiplicity(point)
        w_lin = mult * prod(linear[x - 1] for x in point)
        w_out = mult * prod(at_held_out[x - 1] for x in point)
        coefficient = value.scale(w_lin) if coefficient is None else coefficient + value.scale(w_lin)
        predicted = value.scale(w_out) if predicted is None else predicted + value.scale(w_out)
    actual = evaluate((held_out,) * k)
    if not predicted.agrees_with(actual):
        raise InterpolationError(
            f"Held-out point {(held_out,) * k} not reproduced: degree bound {degree} too small or cap too low")
    return coefficient.scale(Fraction(1, factorial(k)))


def multilinear_value(evaluate: Callable[[Tuple[int, ...]], GaussianRational], k: int, degree: int,
                      budget: int) -> GaussianRational:
    """(1/k!) Coef_{a_1..a_k} of a symmetric polynomial known through its values"""
    degree = max(degree, 1)
    nodes = list(range(1, degree + 2))
    points = list(itertools.combinations_with_replacement(nodes, k))
    if len(points) + 1 > budget:
        raise InterpolationError(f"Grid of {len(points)} points exceeds the evaluation budget {budget}")
    linear = _lagrange_weights(nodes)[1]
    held_out = degree + 2
    at_held_out = _lagrange_values(nodes, held_out)
    coefficient = ZERO
    predicted = ZERO
    for point in points:
        value = evaluate(point)
        mult = _multiplicity(point)
        coefficient = coefficient + value * (mult * prod(linear[x - 1] for x in point))
        predicted = predicted + value * (mult * prod(at_held_out[x - 1] for x in point))
    if predicted != evaluate((held_out,) * k):
        raise InterpolationError(f"Held-out point {(held_out,) * k} not reproduced with degree bound {degree}")
    return coefficient / factorial(k)


def formula_sides(k: int, n: int, cap: int, budget: int, connected: bool) -> Tuple[LaurentSeries, LaurentSeries]:
    """(wedge-side multilinear coefficient, closed form) for the F° or F• identity"""
    variables = z_variables(n)
    if connected:
        def evaluate(point):
            return connected_from_disconnected(sum(point), Profile(point), n, cap).series
        degree = cap - k
    else:
        def evaluate(point):
            return polynomial_part(disconnected_series(sum(point), Profile(point), n, cap))
        degree = cap + n - 1 - k
    lhs = multilinear_series(evaluate, k, degree, budget)
    closed = closed_multilinear_coef(k, variables, cap)
    return lhs, closed['connected' if connected else 'disconnected']


def _vandermonde_transform(values: Dict[Tuple[int, ...], GaussianRational], k: int,
                           nodes: Sequence[int]) -> Dict[Tuple[int, ...], GaussianRational]:
    """Tensor of grid values -> tensor of monomial coefficients, axis by axis"""
    weights = _lagrange_weights(nodes)
    size = len(nodes)
    current = {tuple(x - nodes[0] for x in key): v for key, v in values.items()}
    for axis in range(k):
        updated = {}
        for key in itertools.product(range(size), repeat=k):
            acc = ZERO
            for i in range(size):
                src = key[:axis] + (i,) + key[axis + 1:]
                w = weights[key[axis]][i]
                if w:
                    value = current.get(src)
                    if value:
                        acc = acc + value * w
            if acc:
                updated[key] = acc
        current = updated
    return current


def interpolate_P(g: int, degrees: Sequence[int], k: int, budget: int) -> MultiPoly:
    """P_{g,0,d}(a_1..a_k) = <A, prod tau_{d_j}(omega), (a_1..a_k)>° as a polynomial"""
    degrees = tuple(degrees)
    n = len(degrees)
    avars = tuple(f"a{i}" for i in range(1, k + 1))
    if k < 1 or n < 1:
        raise ProfileError(f"interpolate_P needs k >= 1 and n >= 1, got k={k}, n={n}")
    if genus_of(1, k, degrees) != g:
        logger.debug(f"P vanishes: g={g}, d={degrees}, k={k} violate the dimension constraint")
        return MultiPoly(avars)
    bound = 2 * g + n - 1
    nodes = list(range(1, bound + 3))
    points = list(itertools.combinations_with_replacement(nodes, k))
    if len(points) + 1 > budget:
        raise InterpolationError(f"Grid of {len(points)} points exceeds the evaluation budget {budget}")
    exps = tuple(d + 1 for d in degrees)
    cap = sum(exps)

    def evaluate(point):
        return connected_from_disconnected(sum(point), Profile(point), n, cap).invariant(degrees)

    sorted_values = {point: evaluate(point) for point in points}
    values = {key: sorted_values[tuple(sorted(key))] for key in itertools.product(nodes, repeat=k)}
    coefficients = _vandermonde_transform(values, k, nodes)
    poly = MultiPoly(avars, coefficients)
    held_out = (bound + 3,) * k
    if poly.evaluate(held_out) != evaluate(held_out):
        raise InterpolationError(f"Held-out point {held_out} not reproduced for g={g}, d={degrees}")
    if poly.total_degree() > bound:
        raise InterpolationError(f"Recovered P has degree {poly.total_degree()} > {bound}")
    return poly


# --- general profiles and the degeneration identity -------------------------

def general_disconnected_series(mu: Profile, nu: Profile, n: int, cap: int) -> GwSeries:
    """(1/(prod mu prod nu)) <prod alpha_mu prod E_0(z_j) prod alpha_{-nu}>"""
    if mu.total != nu.total:
        raise ProfileError(f"Profiles {mu.parts} and {nu.parts} have different degrees")
    variables = z_variables(n)
    return GwSeries(mu, nu, n, False, _wedge_series(mu, nu, variables, variables, cap))


def _cylinder_weight(mu: Sequence[int], nu: Sequence[int]) -> Fraction:
    """Sum over part-matching bijections of prod 1/part (trivial cylinders)"""
    if sorted(mu) != sorted(nu):
        return Fraction(0)
    total = Fraction(0)
    for perm in itertools.permutations(range(len(nu))):
        if all(mu[i] == nu[perm[i]] for i in range(len(mu))):
            total += Fraction(1, prod(mu)) if mu else Fraction(1)
    return total


def one_point_connected(mu: Profile, nu: Profile, cap: int) -> GwSeries:
    """F°_{mu,nu}(z) for arbitrary labeled profiles, one insertion"""
    if mu.total != nu.total:
        raise ProfileError(f"Profiles {mu.parts} and {nu.parts} have different degrees")
    variables = ('z1',)
    memo: Dict[Tuple[Tuple[int, ...], Tuple[int, ...]], LaurentSeries] = {}
    degree_zero = _inverse_varsigmas(variables, variables, cap)

    def connected(m: Tuple[int, ...], v: Tuple[int, ...]) -> LaurentSeries:
        if (m, v) in memo:
            return memo[(m, v)]
        total = _wedge_series(Profile(m), Profile(v), variables, variables, cap)
        total = total - degree_zero.scale(_cylinder_weight(m, v))
        for I1 in _subsets(tuple(range(len(m)))):
            for J1 in _subsets(tuple(range(len(v)))):
                if not I1 or not J1 or (len(I1) == len(m) and len(J1) == len(v)):
                    continue
                sub_m = tuple(m[i] for i in I1)
                sub_v = tuple(v[j] for j in J1)
                if sum(sub_m) != sum(sub_v):
                    continue
                rest_m = [m[i] for i in range(len(m)) if i not in I1]
                rest_v = [v[j] for j in range(len(v)) if j not in J1]
                weight = _cylinder_weight(rest_m, rest_v)
                if weight:
                    total = total - connected(sub_m, sub_v).scale(weight)
        memo[(m, v)] = total
        return total

    return GwSeries(mu, nu, 1, True, connected(mu.parts, nu.parts))


def _compositions(total: int):
    """Ordered tuples of positive integers summing to total"""
    if total == 0:
        yield ()
        return
    for first in range(1, total + 1):
        for rest in _compositions(total - first):
            yield (first,) + rest


def connected_invariant(A: int, a: Profile, degrees: Sequence[int]) -> GaussianRational:
    """<A, prod tau_{d_j}(omega), a>° at concrete parts"""
    degrees = tuple(degrees)
    if not degrees:
        return GaussianRational(Fraction(1, a.parts[0]) if len(a) == 1 else 0)
    cap = sum(d + 1 for d in degrees)
    return connected_from_disconnected(A, a, len(degrees), cap).invariant(degrees)


def degeneration_rhs(A: int, a: Profile, degrees: Sequence[int]) -> GaussianRational:
    """Right side of the connected degeneration identity at l = 0

    sum over J1 + J2 = [k], p >= 1, mu in Z>=1^p with |mu| = A_{J2} of
    (prod mu / p!) <A, prod_{j<n} tau_{d_j}, (mu, a_{J1})>° <mu, tau_{d_n}, a_{J2}>°
    """
    a = a if isinstance(a, Profile) else Profile(a)
    _check_one_part(A, a)
    degrees = tuple(degrees)
    if len(degrees) < 2:
        raise ProfileError("The degeneration identity needs n >= 2")
    head, last = degrees[:-1], degrees[-1]
    cap = last + 1
    total = ZERO
    for J2 in _subsets(tuple(range(len(a)))):
        if not J2:
            continue
        J1 = [j for j in range(len(a)) if j not in J2]
        a_J2 = a.sub(J2)
        for mu in _compositions(a_J2.total):
            first = connected_invariant(A, Profile(mu + tuple(a.parts[j] for j in J1)), head)
            if not first:
                continue
            second = one_point_connected(Profile(mu), a_J2, cap).invariant((last,))
            if second:
                total = total + first * second * Fraction(prod(mu), factorial(len(mu)))
    return total
