"""
Exact polynomial arithmetic over the correlator variables and normal forms
modulo the ideal of the correlator variety.

Monomials are exponent 5-tuples over (S0, S1, S00, S01, S11). Every variable
counts as degree 1 (the quotient grading), and monomials are ordered
degree-graded lexicographically with S0 < S1 < S00 < S01 < S11, smaller
variables first within a degree.

The ideal is triangular: every rule rewrites a pure power of one variable
into a tail free of all leading monomials, and leading monomials are coprime,
so rule applications commute and normal forms are unique.
"""
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Callable, Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

from app.core.exceptions import UnsupportedScenarioError, ValidationError
from app.schemas.correlators import CORRELATOR_NAMES, CorrelatorVector, Number
from app.services.scenario import Scenario, enumerate_lds


Coefficient = Union[int, Fraction]

NVARS = len(CORRELATOR_NAMES)
SUPPORTED_BASIS_LEVELS = (0, 1, 2)


class Monomial(NamedTuple):
    """Exponents of S0, S1, S00, S01, S11."""
    e0: int = 0
    e1: int = 0
    e00: int = 0
    e01: int = 0
    e11: int = 0

    @classmethod
    def one(cls) -> "Monomial":
        return cls()

    @classmethod
    def variable(cls, name: str) -> "Monomial":
        if name not in CORRELATOR_NAMES:
            raise ValidationError(f"unknown correlator name {name!r}")
        exps = [0] * NVARS
        exps[CORRELATOR_NAMES.index(name)] = 1
        return cls(*exps)

    @property
    def degree(self) -> int:
        return sum(self)

    def is_normal(self) -> bool:
        return self.e0 <= 1 and self.e1 <= 1

    def times(self, other: "Monomial") -> "Monomial":
        return Monomial(*(a + b for a, b in zip(self, other)))

    def divides(self, other: "Monomial") -> bool:
        return all(a <= b for a, b in zip(self, other))

    def quotient(self, divisor: "Monomial") -> "Monomial":
        return Monomial(*(a - b for a, b in zip(self, divisor)))

    def sort_key(self) -> Tuple[int, Tuple[int, ...]]:
        return (self.degree, tuple(-e for e in self))

    def evaluate(self, values: Sequence[Number]) -> Number:
        result: Number = 1
        for v, e in zip(values, self):
            if e:
                result = result * v ** e
        return result

    def label(self) -> str:
        if self.degree == 0:
            return "1"
        parts = []
        for name, e in zip(CORRELATOR_NAMES, self):
            if e == 1:
                parts.append(name)
            elif e > 1:
                parts.append(f"{name}^{e}")
        return "*".join(parts)


def _exact(value: object) -> Coefficient:
    if isinstance(value, bool):
        raise ValidationError("boolean is not a coefficient")
    if isinstance(value, int):
        return value
    if isinstance(value, Fraction):
        return value.numerator if value.denominator == 1 else value
    if isinstance(value, float):
        return Fraction(value)
    raise ValidationError(f"unsupported coefficient type {type(value).__name__}")


class Polynomial:
    """Immutable sparse polynomial with exact rational coefficients."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Optional[Mapping[Monomial, object]] = None):
        clean: Dict[Monomial, Coefficient] = {}
        for mono, coef in (terms or {}).items():
            c = _exact(coef)
            if c != 0:
                key = mono if isinstance(mono, Monomial) else Monomial(*mono)
                clean[key] = clean.get(key, 0) + c
                if clean[key] == 0:
                    del clean[key]
        self._terms = clean

    @classmethod
    def constant(cls, value: object) -> "Polynomial":
        return cls({Monomial.one(): value})

    @classmethod
    def variable(cls, name: str) -> "Polynomial":
        return cls({Monomial.variable(name): 1})

    @classmethod
    def from_monomial(cls, mono: Monomial, coef: object = 1) -> "Polynomial":
        return cls({mono: coef})

    @property
    def terms(self) -> Mapping[Monomial, Coefficient]:
        return dict(self._terms)

    def items(self) -> Iterable[Tuple[Monomial, Coefficient]]:
        return self._terms.items()

    def monomials(self) -> List[Monomial]:
        return sorted(self._terms, key=Monomial.sort_key)

    def coefficient(self, mono: Monomial) -> Coefficient:
        return self._terms.get(mono, 0)

    @property
    def degree(self) -> int:
        return max((m.degree for m in self._terms), default=0)

    def is_zero(self) -> bool:
        return not self._terms

    def is_normal(self) -> bool:
        return all(m.is_normal() for m in self._terms)

    def _coerce(self, other: object) -> "Polynomial":
        if isinstance(other, Polynomial):
            return other
        return Polynomial.constant(other)

    def __add__(self, other: object) -> "Polynomial":
        other = self._coerce(other)
        terms = dict(self._terms)
        for mono, coef in other._terms.items():
            terms[mono] = terms.get(mono, 0) + coef
        return Polynomial(terms)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial({m: -c for m, c in self._terms.items()})

    def __sub__(self, other: object) -> "Polynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other: object) -> "Polynomial":
        return self._coerce(other) - self

    def __mul__(self, other: object) -> "Polynomial":
        other = self._coerce(other)
        terms: Dict[Monomial, Coefficient] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                key = m1.times(m2)
                terms[key] = terms.get(key, 0) + c1 * c2
        return Polynomial(terms)

    __rmul__ = __mul__

    def __truediv__(self, scalar: object) -> "Polynomial":
        factor = Fraction(1) / _exact(scalar)
        return Polynomial({m: c * factor for m, c in self._terms.items()})

    def __pow__(self, exponent: int) -> "Polynomial":
        if exponent < 0:
            raise ValueError("negative powers are not polynomials")
        result = Polynomial.constant(1)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Polynomial):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == Polynomial.constant(other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def evaluate(self, values: Sequence[Number]) -> Number:
        return sum((c * m.evaluate(values) for m, c in self._terms.items()), 0)

    def __repr__(self) -> str:
        if not self._terms:
            return "Polynomial(0)"
        parts = [f"{c}*{m.label()}" for m, c in sorted(self._terms.items(), key=lambda t: t[0].sort_key(), reverse=True)]
        return "Polynomial(" + " + ".join(parts) + ")"


class RewriteRule(NamedTuple):
    """lead -> tail, with lead a pure power of one variable."""
    lead: Monomial
    tail: Polynomial


# Picks which (monomial, rule) to rewrite next among the reducible pairs.
RewriteStrategy = Callable[[List[Tuple[Monomial, RewriteRule]]], Tuple[Monomial, RewriteRule]]


def _leading(poly: Polynomial) -> Monomial:
    return max(poly.monomials(), key=Monomial.sort_key)


class TriangularIdeal:
    """
    An ideal given by generators whose leading monomials are pure powers of
    distinct variables and whose tails avoid every leading monomial.
    """

    def __init__(self, generators: Sequence[Polynomial]):
        rules: List[RewriteRule] = []
        for gen in generators:
            if gen.is_zero():
                raise ValidationError("zero generator")
            lead = _leading(gen)
            if sum(1 for e in lead if e) != 1:
                raise ValidationError(f"leading monomial {lead.label()} is not a pure variable power")
            coef = gen.coefficient(lead)
            tail = -(gen - Polynomial.from_monomial(lead, coef)) / coef
            rules.append(RewriteRule(lead, tail))
        variables = [next(i for i, e in enumerate(r.lead) if e) for r in rules]
        if len(set(variables)) != len(variables):
            raise ValidationError("leading monomials must involve distinct variables")
        for rule in rules:
            for mono in rule.tail.monomials():
                if any(other.lead.divides(mono) for other in rules):
                    raise ValidationError(f"tail of {rule.lead.label()} is not reduced")
        self.generators = tuple(generators)
        self.rules = tuple(rules)

    def is_normal(self, mono: Monomial) -> bool:
        return not any(rule.lead.divides(mono) for rule in self.rules)

    def reduce(self, poly: Polynomial, strategy: Optional[RewriteStrategy] = None) -> Polynomial:
        """
        Rewrite until no monomial is divisible by a leading monomial.

        Without a strategy, every reducible term is rewritten by its first
        applicable rule in each pass. A strategy rewrites one chosen
        (term, rule) pair at a time, which lets tests drive arbitrary
        interleavings.
        """
        current = poly
        while True:
            reducible = [
                (mono, rule)
                for mono in current.monomials()
                for rule in self.rules
                if rule.lead.divides(mono)
            ]
            if not reducible:
                return current
            if strategy is None:
                chosen: Dict[Monomial, RewriteRule] = {}
                for mono, rule in reducible:
                    chosen.setdefault(mono, rule)
                pairs = list(chosen.items())
            else:
                pairs = [strategy(reducible)]
            for mono, rule in pairs:
                coef = current.coefficient(mono)
                rest = Polynomial.from_monomial(mono.quotient(rule.lead), coef)
                current = current - Polynomial.from_monomial(mono, coef) + rest * rule.tail


def ideal_generators(N: int) -> Tuple[Polynomial, Polynomial]:
    """f1 = S00 - S0^2 + N and f2 = S11 - S1^2 + N."""
    Scenario(N=N).check_supported()
    s0, s1 = Polynomial.variable("S0"), Polynomial.variable("S1")
    f1 = Polynomial.variable("S00") - s0 * s0 + N
    f2 = Polynomial.variable("S11") - s1 * s1 + N
    return f1, f2


@lru_cache(maxsize=64)
def correlator_ideal(N: int) -> TriangularIdeal:
    return TriangularIdeal(ideal_generators(N))


def reduce(p: Polynomial, N: int, strategy: Optional[RewriteStrategy] = None) -> Polynomial:
    """Normal form of p modulo the correlator ideal: S0^2 -> S00 + N, S1^2 -> S11 + N."""
    return correlator_ideal(N).reduce(p, strategy)


def normal_monomials(degree: int) -> List[Monomial]:
    """Normal-form monomials of exactly the given degree, in basis order."""
    if degree == 0:
        return [Monomial.one()]
    monos = set()
    for combo in combinations_with_replacement(range(NVARS), degree):
        exps = [0] * NVARS
        for var in combo:
            exps[var] += 1
        mono = Monomial(*exps)
        if mono.is_normal():
            monos.add(mono)
    return sorted(monos, key=Monomial.sort_key)


def quotient_basis(mu: int) -> List[Monomial]:
    """Normal-form monomials of degree <= mu; the constant monomial comes first."""
    if mu not in SUPPORTED_BASIS_LEVELS:
        raise UnsupportedScenarioError(f"hierarchy level mu={mu} is not supported")
    basis: List[Monomial] = []
    for degree in range(mu + 1):
        basis.extend(normal_monomials(degree))
    return basis


def constraint_polynomials(N: int) -> Tuple[Polynomial, Polynomial, Polynomial, Polynomial]:
    """
    g_i with g_i(S(x)) = x_i, obtained by inverting the strategy-count map.

    For strategy i with outcome signs (a, b):
        g_i = (N + a*S0 + b*S1 + a*b*(S0*S1 - S01)) / 4
    with N written as S0^2 - S00 before reduction.
    """
    scenario = Scenario(N=N)
    scenario.check_supported()
    s0, s1 = Polynomial.variable("S0"), Polynomial.variable("S1")
    s01 = Polynomial.variable("S01")
    count_of_parties = s0 * s0 - Polynomial.variable("S00")
    z = s0 * s1 - s01
    ideal = correlator_ideal(N)
    gs = []
    for a, b in enumerate_lds(scenario):
        g = (count_of_parties + a * s0 + b * s1 + (a * b) * z) / 4
        gs.append(ideal.reduce(g))
    return tuple(gs)


def evaluate(p: Polynomial, point: Union[CorrelatorVector, Sequence[Number]]) -> Number:
    """Substitute the correlator values into p."""
    values = point.as_tuple() if isinstance(point, CorrelatorVector) else tuple(point)
    return p.evaluate(values)
