"""
Bell scenario, local deterministic strategies and the map from strategy
counts to symmetric correlators.

Strategy i is labelled by the outcome pair (outcome of measurement 0,
outcome of measurement 1):

    1 = (+1, +1)   2 = (-1, +1)   3 = (+1, -1)   4 = (-1, -1)

so that, for counts x,

    N  = x1 + x2 + x3 + x4
    S1 = x1 + x2 - x3 - x4
    S0 = x1 - x2 + x3 - x4
    Z  = x1 - x2 - x3 + x4

and the two-body correlators follow as S00 = S0^2 - N, S01 = S0 S1 - Z,
S11 = S1^2 - N.
"""
import logging
from fractions import Fraction
from math import comb
from typing import Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.config import settings
from app.core.exceptions import BudgetExceededError, UnsupportedScenarioError, ValidationError
from app.schemas.correlators import CorrelatorVector, Number, StrategyCounts


logger = logging.getLogger(__name__)

# Real-valued counts are accepted when their sum is within this relative distance of N.
REAL_SUM_TOLERANCE = 1e-9


class Scenario(BaseModel):
    """N parties, d dichotomic settings each, correlators up to K bodies."""
    model_config = ConfigDict(frozen=True)

    N: int
    d: int = 2
    K: int = 2

    @property
    def m(self) -> int:
        """Deterministic strategies per party."""
        return 2 ** self.d

    @property
    def dimension(self) -> int:
        """Dimension of the correlator space."""
        return comb(self.d + self.K, self.d) - 1

    def check_supported(self) -> None:
        if self.N < 2:
            raise ValidationError(f"N must be at least 2, got {self.N}")
        if self.d != 2:
            raise UnsupportedScenarioError(f"only d=2 settings per party are supported, got d={self.d}")
        if self.K != 2:
            raise UnsupportedScenarioError(f"only correlators up to K=2 bodies are supported, got K={self.K}")


def enumerate_lds(scenario: Scenario) -> List[Tuple[int, int]]:
    """
    List the local deterministic strategies of one party.

    Returns the sign pairs (outcome of measurement 0, outcome of measurement 1)
    in the fixed strategy order used throughout the package.
    """
    if scenario.d != 2:
        raise UnsupportedScenarioError(f"only d=2 settings per party are supported, got d={scenario.d}")
    return [(+1, +1), (-1, +1), (+1, -1), (-1, -1)]


def _as_exact(value: object) -> Number:
    if isinstance(value, (bool, np.bool_)):
        raise ValidationError("strategy counts must be numbers")
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (float, np.floating)):
        if not np.isfinite(value):
            raise ValidationError(f"strategy count {value!r} is not finite")
        return float(value)
    raise ValidationError(f"unsupported strategy count type {type(value).__name__}")


def validate_counts(x: Sequence[object], N: int) -> StrategyCounts:
    """Check non-negativity and the sum rule; integers and Fractions must sum to N exactly."""
    if len(x) != 4:
        raise ValidationError(f"expected 4 strategy counts, got {len(x)}")
    values = [_as_exact(v) for v in x]
    if any(v < 0 for v in values):
        raise ValidationError(f"strategy counts must be non-negative, got {values}")
    total = sum(values)
    if any(isinstance(v, float) for v in values):
        if abs(total - N) > REAL_SUM_TOLERANCE * max(1, N):
            raise ValidationError(f"strategy counts sum to {total}, expected N={N}")
    elif total != N:
        raise ValidationError(f"strategy counts sum to {total}, expected N={N}")
    return StrategyCounts(x=tuple(values))


def vertex_correlators(x: object, N: int) -> CorrelatorVector:
    """
    Evaluate the symmetric correlators of strategy counts x.

    Accepts a StrategyCounts or a plain sequence. Integer counts give exact
    integer correlators, Fraction counts exact rationals, floats give floats.
    """
    counts = validate_counts(x.x if isinstance(x, StrategyCounts) else x, N)
    x1, x2, x3, x4 = counts.x
    s1 = x1 + x2 - x3 - x4
    s0 = x1 - x2 + x3 - x4
    z = x1 - x2 - x3 + x4
    return CorrelatorVector(
        S0=s0,
        S1=s1,
        S00=s0 * s0 - N,
        S01=s0 * s1 - z,
        S11=s1 * s1 - N,
    )


def vertex_count(N: int) -> int:
    """Number of integer compositions of N into four non-negative parts."""
    return comb(N + 3, 3)


def check_budget(N: int, budget: Optional[int] = None) -> int:
    budget = settings.VERTEX_BUDGET if budget is None else budget
    count = vertex_count(N)
    if count > budget:
        raise BudgetExceededError(count, budget)
    return count


class VertexChunk(NamedTuple):
    """A contiguous run of vertices: counts (k, 4) and correlators (k, 5), both int64."""
    offset: int
    counts: np.ndarray
    correlators: np.ndarray


def _compositions_with_first(N: int, x1: int) -> np.ndarray:
    """All (x1, x2, x3, x4) with the given x1, in lexicographic order."""
    rest = N - x1
    x2_values = np.arange(rest + 1, dtype=np.int64)
    run_lengths = rest + 1 - x2_values
    x2 = np.repeat(x2_values, run_lengths)
    starts = np.repeat(np.cumsum(run_lengths) - run_lengths, run_lengths)
    x3 = np.arange(x2.size, dtype=np.int64) - starts
    x4 = rest - x2 - x3
    x1_col = np.full(x2.size, x1, dtype=np.int64)
    return np.stack([x1_col, x2, x3, x4], axis=1)


def correlators_of_counts(counts: np.ndarray, N: int) -> np.ndarray:
    """Vectorised vertex_correlators for an integer (k, 4) array."""
    x1, x2, x3, x4 = counts[:, 0], counts[:, 1], counts[:, 2], counts[:, 3]
    s1 = x1 + x2 - x3 - x4
    s0 = x1 - x2 + x3 - x4
    z = x1 - x2 - x3 + x4
    return np.stack([s0, s1, s0 * s0 - N, s0 * s1 - z, s1 * s1 - N], axis=1)


def partition_first_counts(N: int, workers: int) -> List[range]:
    """
    Split the x1 values 0..N into `workers` contiguous ranges of similar vertex mass.

    Chunks with small x1 hold the most vertices, so the split balances the
    number of compositions rather than the number of x1 values.
    """
    workers = max(1, min(workers, N + 1))
    sizes = np.array([comb(N - x1 + 2, 2) for x1 in range(N + 1)], dtype=float)
    cumulative = np.cumsum(sizes) / sizes.sum()
    bounds = [0]
    for w in range(1, workers):
        cut = int(np.searchsorted(cumulative, w / workers)) + 1
        bounds.append(max(cut, bounds[-1]))
    bounds.append(N + 1)
    return [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def iter_vertex_chunks(
    N: int,
    first_counts: Optional[range] = None,
    budget: Optional[int] = None,
) -> Iterator[VertexChunk]:
    """
    Stream the vertices of the symmetrized local polytope in lexicographic
    order of their strategy counts, one chunk per value of x1.

    `first_counts` restricts the stream to a range of x1 values so callers can
    partition the composition space across workers (see partition_first_counts).
    Offsets are global vertex indices regardless of the restriction.
    """
    check_budget(N, budget)
    first_counts = range(N + 1) if first_counts is None else first_counts
    offset = sum(comb(N - x1 + 2, 2) for x1 in range(first_counts.start)) if first_counts.start > 0 else 0
    for x1 in first_counts:
        counts = _compositions_with_first(N, x1)
        yield VertexChunk(offset, counts, correlators_of_counts(counts, N))
        offset += counts.shape[0]
        if x1 % 64 == 0:
            logger.debug("vertex stream N=%d reached x1=%d (offset %d)", N, x1, offset)


def enumerate_vertices(N: int, budget: Optional[int] = None) -> Iterator[Tuple[StrategyCounts, CorrelatorVector]]:
    """
    Lazily enumerate (strategy counts, correlators) for every vertex.

    The budget is checked before the first item is produced.
    """
    Scenario(N=N).check_supported()
    check_budget(N, budget)
    return _vertex_pairs(N, budget)


def _vertex_pairs(N: int, budget: Optional[int]) -> Iterator[Tuple[StrategyCounts, CorrelatorVector]]:
    for chunk in iter_vertex_chunks(N, budget=budget):
        for counts, corr in zip(chunk.counts.tolist(), chunk.correlators.tolist()):
            yield StrategyCounts(x=tuple(counts)), CorrelatorVector.from_sequence(corr)


def vertex_arrays(N: int, budget: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Materialize all vertices as (counts, correlators) int64 arrays."""
    chunks = list(iter_vertex_chunks(N, budget=budget))
    return (
        np.concatenate([c.counts for c in chunks], axis=0),
        np.concatenate([c.correlators for c in chunks], axis=0),
    )
