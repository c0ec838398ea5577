import random
from fractions import Fraction

import pytest

from app.core.exceptions import UnsupportedScenarioError, ValidationError
from app.services.quotient_ring import (
    Monomial,
    Polynomial,
    TriangularIdeal,
    constraint_polynomials,
    evaluate,
    ideal_generators,
    normal_monomials,
    quotient_basis,
    reduce,
)
from app.services.scenario import enumerate_vertices, vertex_correlators


S0, S1 = Polynomial.variable("S0"), Polynomial.variable("S1")
S00, S01, S11 = Polynomial.variable("S00"), Polynomial.variable("S01"), Polynomial.variable("S11")


def random_polynomial(rng: random.Random, max_degree: int = 6, terms: int = 4) -> Polynomial:
    result = Polynomial()
    for _ in range(rng.randint(1, terms)):
        exps = [0] * 5
        for _ in range(rng.randint(0, max_degree)):
            exps[rng.randrange(5)] += 1
        result = result + Polynomial.from_monomial(Monomial(*exps), Fraction(rng.randint(-9, 9), rng.randint(1, 5)))
    return result


def random_rational_counts(rng: random.Random, N: int):
    weights = [Fraction(rng.randint(0, 1000), rng.randint(1, 50)) for _ in range(4)]
    total = sum(weights)
    if total == 0:
        weights, total = [Fraction(1)] * 4, Fraction(4)
    return tuple(w * N / total for w in weights)


def test_ideal_generators():
    f1, f2 = ideal_generators(10)
    assert f1 == S00 - S0 * S0 + 10
    assert f2 == S11 - S1 * S1 + 10


def test_generators_vanish_on_vertices_and_variety():
    f1, f2 = ideal_generators(10)
    for _, point in enumerate_vertices(10):
        assert evaluate(f1, point) == 0
        assert evaluate(f2, point) == 0
    point = vertex_correlators((1.5, 2.25, 3.0, 3.25), 10)
    assert evaluate(f2, point) == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize(
    "poly, expected",
    [
        (S0 * S0, S00 + 10),
        (S0 * S0 * S1, S00 * S1 + 10 * S1),
        (S0 ** 4, S00 * S00 + 20 * S00 + 100),
        (S1 ** 3, S11 * S1 + 10 * S1),
        (S0 * S1 * S01, S0 * S1 * S01),
    ],
)
def test_reduce_examples(poly, expected):
    assert reduce(poly, 10) == expected


def test_reduce_preserves_values_on_variety():
    rng = random.Random(7)
    for _ in range(50):
        p = random_polynomial(rng)
        point = vertex_correlators(random_rational_counts(rng, 10), 10)
        assert evaluate(reduce(p, 10), point) == evaluate(p, point)


def test_reduction_is_confluent_and_idempotent():
    """Every interleaving of rule applications ends in the same normal form."""
    rng = random.Random(2024)

    def pick(pairs):
        return rng.choice(pairs)

    for _ in range(1000):
        p = random_polynomial(rng)
        normal = reduce(p, 10)
        assert normal.is_normal()
        assert reduce(p, 10, strategy=pick) == normal
        assert reduce(normal, 10) == normal


def test_triangular_ideal_rejects_bad_generators():
    with pytest.raises(ValidationError):
        TriangularIdeal([S0 * S1 - 1])
    with pytest.raises(ValidationError):
        TriangularIdeal([S0 * S0 - S00, S0 * S0 * S0 - S01])


def test_quotient_basis():
    assert quotient_basis(0) == [Monomial.one()]
    assert [m.label() for m in quotient_basis(1)] == ["1", "S0", "S1", "S00", "S01", "S11"]
    second = quotient_basis(2)
    assert len(second) == 19
    assert len(normal_monomials(2)) == 13
    assert all(m.is_normal() for m in second)
    assert Monomial.variable("S0").times(Monomial.variable("S0")) not in second
    with pytest.raises(UnsupportedScenarioError):
        quotient_basis(3)


def test_first_constraint_polynomial():
    g1 = constraint_polynomials(10)[0]
    expected = (S0 + S1 + S0 * S1 - S01 + 10) / 4
    assert g1 == expected


def test_constraint_polynomials_invert_counts():
    gs = constraint_polynomials(10)
    point = vertex_correlators((3, 3, 2, 2), 10)
    assert tuple(evaluate(g, point) for g in gs) == (3, 3, 2, 2)
    assert evaluate(gs[0], vertex_correlators((10, 0, 0, 0), 10)) == 10


def test_constraint_polynomials_exact_on_rational_counts():
    rng = random.Random(11)
    for _ in range(200):
        N = rng.choice([2, 5, 10, 476])
        gs = constraint_polynomials(N)
        x = random_rational_counts(rng, N)
        point = vertex_correlators(x, N)
        assert tuple(evaluate(g, point) for g in gs) == x


def test_constraint_polynomials_sum_to_n():
    assert sum(constraint_polynomials(10), Polynomial()) == Polynomial.constant(10)
