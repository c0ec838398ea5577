from fractions import Fraction
from itertools import permutations, product
from math import comb

import numpy as np
import pytest

from app.core.exceptions import BudgetExceededError, UnsupportedScenarioError, ValidationError
from app.services.scenario import (
    Scenario,
    check_budget,
    enumerate_lds,
    enumerate_vertices,
    iter_vertex_chunks,
    partition_first_counts,
    validate_counts,
    vertex_arrays,
    vertex_correlators,
    vertex_count,
)


def party_correlators(parties):
    """Sum per-party outcomes over ordered pairs of distinct parties."""
    N = len(parties)
    s = [sum(p[k] for p in parties) for k in range(2)]
    pairs = {}
    for k, l in ((0, 0), (0, 1), (1, 1)):
        pairs[(k, l)] = sum(
            parties[i][k] * parties[j][l] for i in range(N) for j in range(N) if i != j
        )
    return (s[0], s[1], pairs[(0, 0)], pairs[(0, 1)], pairs[(1, 1)])


def brute_force_correlators(x, N):
    strategies = enumerate_lds(Scenario(N=N))
    return party_correlators([strategies[i] for i, count in enumerate(x) for _ in range(count)])


def test_enumerate_lds_order():
    """Strategies follow the fixed sign order."""
    strategies = enumerate_lds(Scenario(N=4))
    assert strategies == [(1, 1), (-1, 1), (1, -1), (-1, -1)]
    assert len(set(strategies)) == 4


def test_unsupported_settings():
    with pytest.raises(UnsupportedScenarioError):
        enumerate_lds(Scenario(N=4, d=3))
    with pytest.raises(UnsupportedScenarioError):
        Scenario(N=4, K=3).check_supported()
    with pytest.raises(ValidationError):
        Scenario(N=1).check_supported()


def test_scenario_dimension():
    scenario = Scenario(N=10)
    assert scenario.m == 4
    assert scenario.dimension == 5


@pytest.mark.parametrize(
    "x, expected",
    [
        ((10, 0, 0, 0), (10, 10, 90, 90, 90)),
        ((0, 10, 0, 0), (-10, 10, 90, -90, 90)),
        ((3, 3, 2, 2), (0, 2, -10, 0, -6)),
    ],
)
def test_vertex_correlators(x, expected):
    assert vertex_correlators(x, 10).as_tuple() == expected


def test_vertex_correlators_match_brute_force():
    for x in [(1, 2, 3, 4), (0, 0, 5, 5), (7, 1, 1, 1), (2, 0, 8, 0)]:
        assert vertex_correlators(x, 10).as_tuple() == brute_force_correlators(x, 10)


@pytest.mark.parametrize("N", [2, 3, 4, 5, 6])
def test_every_vertex_matches_brute_force(N):
    for x in product(range(N + 1), repeat=4):
        if sum(x) == N:
            assert vertex_correlators(x, N).as_tuple() == brute_force_correlators(x, N), x


@pytest.mark.parametrize("N", [2, 3, 4, 5])
def test_correlators_depend_only_on_counts(N):
    """Every assignment of strategies to parties, and every reordering of it, gives the count-based value."""
    strategies = enumerate_lds(Scenario(N=N))
    for assignment in product(range(4), repeat=N):
        counts = tuple(assignment.count(i) for i in range(4))
        expected = vertex_correlators(counts, N).as_tuple()
        orderings = permutations(assignment) if N <= 4 else [assignment, assignment[::-1], assignment[1:] + assignment[:1]]
        for ordering in orderings:
            assert party_correlators([strategies[i] for i in ordering]) == expected, ordering


def test_vertex_correlators_exact_for_fractions():
    x = (Fraction(5, 2), Fraction(5, 2), Fraction(5, 2), Fraction(5, 2))
    assert vertex_correlators(x, 10).as_tuple() == (0, 0, -10, 0, -10)


@pytest.mark.parametrize(
    "x",
    [(1, 2, 3), (-1, 5, 3, 3), (1, 1, 1, 1), (2.5, 2.5, 2.5, 2.0), (float("nan"), 5, 5, 0), (True, 3, 3, 3)],
)
def test_invalid_counts(x):
    with pytest.raises(ValidationError):
        validate_counts(x, 10)


def test_vertex_counts():
    assert vertex_count(10) == 286
    assert vertex_count(2) == 10
    assert vertex_count(476) == comb(479, 3) == 18_202_479
    assert len(list(enumerate_vertices(2))) == 10
    assert len(list(enumerate_vertices(10))) == 286


def test_enumerate_vertices_lexicographic_and_complete():
    counts = [tuple(c.x) for c, _ in enumerate_vertices(4)]
    expected = [x for x in product(range(5), repeat=4) if sum(x) == 4]
    assert counts == sorted(expected)


def test_enumerate_vertices_checks_budget_eagerly():
    with pytest.raises(BudgetExceededError) as exc:
        enumerate_vertices(10, budget=100)
    assert exc.value.count == 286
    assert exc.value.status_code == 413


def test_check_budget_returns_count():
    assert check_budget(10, budget=286) == 286


def test_chunks_match_scalar_evaluation():
    counts, correlators = vertex_arrays(6)
    assert counts.shape == (vertex_count(6), 4)
    assert correlators.dtype == np.int64
    for row, corr in zip(counts[::7], correlators[::7]):
        assert tuple(corr.tolist()) == vertex_correlators(tuple(row.tolist()), 6).as_tuple()


@pytest.mark.parametrize("workers", [1, 2, 3, 8, 40])
def test_partitioned_stream_covers_every_vertex_once(workers):
    N = 12
    ranges = partition_first_counts(N, workers)
    assert ranges[0].start == 0 and ranges[-1].stop == N + 1
    for left, right in zip(ranges, ranges[1:]):
        assert left.stop == right.start
    offsets = []
    for r in ranges:
        for chunk in iter_vertex_chunks(N, first_counts=r):
            offsets.extend(range(chunk.offset, chunk.offset + chunk.counts.shape[0]))
    assert offsets == list(range(vertex_count(N)))
