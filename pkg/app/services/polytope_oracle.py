"""
Ground truth for the symmetrized local polytope: membership and ray LPs,
classical bounds, 2D projections and points of the relaxed surface.

Everything streams vertices chunk by chunk from scenario.iter_vertex_chunks.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from math import lcm
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from app.core.exceptions import NumericalFailureError, ValidationError
from app.schemas.correlators import (
    CORRELATOR_NAMES,
    BellInequality,
    CorrelatorVector,
    LinearFunctional,
    MembershipVerdict,
    Number,
    StrategyCounts,
)
from app.services.lp import ColumnChunk, StreamingSimplex
from app.services.scenario import (
    check_budget,
    iter_vertex_chunks,
    partition_first_counts,
    vertex_correlators,
    vertex_count,
)


logger = logging.getLogger(__name__)

Point2D = Tuple[float, float]

INT64_HEADROOM = 2 ** 62
OBJECT_PATH_LIMIT = 10 ** 6
COLLINEAR_TOLERANCE = 1e-12
SUPPORT_TOLERANCE = 1e-9
SUPPORT_BATCH = 4096


def _functional_matrix(functionals: Sequence[LinearFunctional]) -> np.ndarray:
    if not 1 <= len(functionals) <= len(CORRELATOR_NAMES):
        raise ValidationError(f"between 1 and {len(CORRELATOR_NAMES)} functionals are required, got {len(functionals)}")
    for functional in functionals:
        if functional.is_zero():
            raise ValidationError("functional is identically zero")
    return np.array([f.as_array() for f in functionals])


def _row_scale(matrix: np.ndarray, N: int) -> np.ndarray:
    """Rows scaled so every projected vertex coordinate is at most 1 in magnitude."""
    return 1.0 / np.maximum(1.0, np.abs(matrix).sum(axis=1) * N * N)


def _vertex_columns(N: int, matrix: np.ndarray, scale: np.ndarray, extra: Optional[ColumnChunk] = None):
    shift = 0 if extra is None else extra.matrix.shape[1]

    def source() -> Iterator[ColumnChunk]:
        if extra is not None:
            yield extra
        for chunk in iter_vertex_chunks(N):
            projected = (chunk.correlators @ matrix.T) * scale[None, :]
            k = projected.shape[0]
            block = np.vstack([projected.T, np.ones((1, k))])
            yield ColumnChunk(chunk.offset + shift, block, np.zeros(k), chunk.counts)

    return source


def _separator(duals: np.ndarray, matrix: np.ndarray, scale: np.ndarray, N: int, values: np.ndarray) -> BellInequality:
    """
    Turn Phase I multipliers (p, q) with p . phi(v) + q <= 0 on every vertex
    into alpha . S + beta >= 0, then tighten beta to the exact vertex minimum.
    """
    p = duals[:-1] * scale
    alpha = -(p @ matrix)
    largest = float(np.abs(alpha).max())
    if largest == 0.0:
        raise NumericalFailureError("separating multipliers vanish", phrase="lp_stalled")
    alpha = alpha / largest
    minimum, _ = _float_minimum(alpha, N, workers=1)
    beta = -minimum
    # alpha . S at any S with phi(S) = values
    level = -float(p @ values) / largest + beta
    if not level < 0:
        raise NumericalFailureError(
            f"LP multipliers do not separate the queried values (level {level:.3e})", phrase="lp_stalled"
        )
    return BellInequality(alpha=alpha.tolist(), betaC=beta, note="tight separating inequality from LP multipliers")


def membership_projected(
    functionals: Sequence[LinearFunctional],
    values: Sequence[float],
    N: int,
) -> MembershipVerdict:
    """
    Decide whether the value tuple lies in the image of the polytope under
    the functionals, by Phase I over convex weights on the vertices.
    """
    matrix = _functional_matrix(functionals)
    values = np.asarray(values, dtype=float)
    if values.shape != (matrix.shape[0],):
        raise ValidationError(f"expected {matrix.shape[0]} values, got {values.size}")
    check_budget(N)
    scale = _row_scale(matrix, N)
    rhs = np.concatenate([values * scale, [1.0]])
    result = StreamingSimplex(rhs, _vertex_columns(N, matrix, scale)).feasible_point()
    if result.status == "stalled":
        raise NumericalFailureError(f"membership LP stalled after {result.iterations} pivots", phrase="lp_stalled")

    if result.status == "optimal":
        weights = [(tuple(int(c) for c in col.payload), col.value) for col in result.basis if col.value > 0]
        total = sum(w for _, w in weights)
        reconstructed = np.zeros(matrix.shape[0])
        for counts, w in weights:
            corr = np.array(vertex_correlators(counts, N).as_tuple(), dtype=float)
            reconstructed += w * (matrix @ corr)
        residual = float(max(np.abs(reconstructed - values).max() / max(1.0, np.abs(values).max()), abs(total - 1.0)))
        return MembershipVerdict(status="inside", weights=sorted(weights), residual=residual)

    separator = _separator(result.duals, matrix, scale, N, values)
    return MembershipVerdict(status="outside", separator=separator, residual=result.infeasibility)


def membership(point: CorrelatorVector, N: int) -> MembershipVerdict:
    """Membership of a full correlator vector in the polytope."""
    unit = [LinearFunctional(coefficients={name: 1}) for name in CORRELATOR_NAMES]
    return membership_projected(unit, [float(v) for v in point.as_tuple()], N)


def ray_radius(functionals: Sequence[LinearFunctional], values: Sequence[float], N: int) -> float:
    """
    Largest r >= 0 with the functionals equal to r * values somewhere on the
    polytope. Returns nan when no r >= 0 works.
    """
    matrix = _functional_matrix(functionals)
    values = np.asarray(values, dtype=float)
    if not np.any(values):
        raise ValidationError("zero direction: every value is 0")
    check_budget(N)
    scale = _row_scale(matrix, N)
    ray = np.concatenate([-values * scale, [0.0]])[:, None]
    extra = ColumnChunk(0, ray, np.array([-1.0]), None)
    rhs = np.concatenate([np.zeros(matrix.shape[0]), [1.0]])
    result = StreamingSimplex(rhs, _vertex_columns(N, matrix, scale, extra)).solve()
    if result.status == "stalled":
        raise NumericalFailureError(f"ray LP stalled after {result.iterations} pivots", phrase="lp_stalled")
    if result.status == "infeasible":
        return float("nan")
    if result.status == "unbounded":
        raise NumericalFailureError("ray LP is unbounded", phrase="lp_stalled")
    return float(sum(col.value for col in result.basis if col.index == 0))


def _exact_alpha(alpha: Sequence[Number]) -> Optional[Tuple[List[int], int]]:
    """Integer coefficients and their common denominator, or None for float coefficients."""
    if any(isinstance(a, float) for a in alpha):
        return None
    fractions = [Fraction(a) for a in alpha]
    denominator = 1
    for f in fractions:
        denominator = lcm(denominator, f.denominator)
    return [int(f * denominator) for f in fractions], denominator


def _range_minimum(alpha: np.ndarray, N: int, first_counts: range) -> Tuple[object, Optional[np.ndarray]]:
    best, best_counts = None, None
    for chunk in iter_vertex_chunks(N, first_counts=first_counts):
        correlators = chunk.correlators.astype(alpha.dtype) if alpha.dtype == object else chunk.correlators
        values = correlators @ alpha
        i = int(np.argmin(values))
        if best is None or values[i] < best:
            best, best_counts = values[i], chunk.counts[i]
    return best, best_counts


def _reduce_minimum(alpha: np.ndarray, N: int, workers: int) -> Tuple[object, Tuple[int, ...]]:
    ranges = partition_first_counts(N, workers)
    if len(ranges) == 1:
        parts = [_range_minimum(alpha, N, ranges[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(ranges)) as pool:
            parts = list(pool.map(lambda r: _range_minimum(alpha, N, r), ranges))
    best, counts = min(parts, key=lambda part: part[0])
    return best, tuple(int(c) for c in counts)


def _float_minimum(alpha: np.ndarray, N: int, workers: int) -> Tuple[float, Tuple[int, ...]]:
    best, counts = _reduce_minimum(np.asarray(alpha, dtype=float), N, workers)
    return float(best), counts


def classical_minimum(expression: BellInequality, N: int, workers: int = 1) -> Tuple[Number, Tuple[int, ...]]:
    """
    Minimum of alpha . S over all vertices (betaC ignored) and a minimizing
    strategy-count vector.

    Rational coefficients are scaled to integers and the sweep runs in int64,
    or in Python integers when int64 could overflow. Float coefficients are
    swept in float64.
    """
    check_budget(N)
    alpha = expression.alpha_vector()
    exact = _exact_alpha(alpha)
    if exact is None:
        return _float_minimum(np.array([float(a) for a in alpha]), N, workers)
    integers, denominator = exact
    reach = sum(abs(a) for a in integers) * N * N
    if reach < INT64_HEADROOM:
        vector = np.array(integers, dtype=np.int64)
    elif vertex_count(N) <= OBJECT_PATH_LIMIT:
        vector = np.array(integers, dtype=object)
    else:
        logger.info("coefficients too large for an exact int64 sweep at N=%d; using float64", N)
        return _float_minimum(np.array([float(a) for a in alpha]), N, workers)
    best, counts = _reduce_minimum(vector, N, workers)
    value = Fraction(int(best), denominator)
    return (value.numerator if value.denominator == 1 else value), counts


def classical_bound(expression: BellInequality, N: int, workers: int = 1) -> Number:
    """Exact minimum over vertices of alpha . S for rational alpha."""
    return classical_minimum(expression, N, workers)[0]


def _hull_points(points: np.ndarray) -> np.ndarray:
    unique = np.unique(points, axis=0)
    if unique.shape[0] < 3:
        return unique
    try:
        return unique[ConvexHull(unique).vertices]
    except QhullError:
        return unique


def _projected_candidates(N: int, matrix: np.ndarray, workers: int = 1) -> np.ndarray:
    """Hull-reduced projections of every vertex: each chunk keeps its own hull vertices."""
    check_budget(N)

    def collect(first_counts: range) -> np.ndarray:
        parts = [_hull_points(chunk.correlators @ matrix.T) for chunk in iter_vertex_chunks(N, first_counts=first_counts)]
        return _hull_points(np.vstack(parts))

    ranges = partition_first_counts(N, workers)
    if len(ranges) == 1:
        merged = [collect(ranges[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(ranges)) as pool:
            merged = list(pool.map(collect, ranges))
    return np.vstack(merged)


def _plane_matrix(f1: LinearFunctional, f2: LinearFunctional) -> np.ndarray:
    matrix = _functional_matrix([f1, f2])
    if np.linalg.matrix_rank(matrix) < 2:
        raise ValidationError("plane functionals must be linearly independent")
    return matrix


def _drop_collinear(polygon: List[Point2D]) -> List[Point2D]:
    points = list(polygon)
    changed = True
    while changed and len(points) > 2:
        changed = False
        for i in range(len(points)):
            prev, cur, nxt = np.array(points[i - 1]), np.array(points[i]), np.array(points[(i + 1) % len(points)])
            a, b = cur - prev, nxt - cur
            cross = a[0] * b[1] - a[1] * b[0]
            if abs(cross) <= COLLINEAR_TOLERANCE * max(1.0, np.dot(a, a), np.dot(b, b)):
                del points[i]
                changed = True
                break
    return points


def _canonical_start(polygon: List[Point2D]) -> List[Point2D]:
    if not polygon:
        return polygon
    start = min(range(len(polygon)), key=lambda i: (polygon[i][1], polygon[i][0]))
    return polygon[start:] + polygon[:start]


def project_2d(N: int, f1: LinearFunctional, f2: LinearFunctional, workers: int = 1) -> List[Point2D]:
    """
    Convex hull of the projected vertices, counter-clockwise, starting at the
    lowest (then leftmost) vertex, without collinear triples.
    """
    matrix = _plane_matrix(f1, f2)
    candidates = _projected_candidates(N, matrix, workers)
    unique = np.unique(candidates, axis=0)
    if unique.shape[0] < 3:
        return _canonical_start([tuple(map(float, p)) for p in unique])
    try:
        hull = ConvexHull(unique)
    except QhullError:
        ends = unique[[0, -1]]
        return _canonical_start([tuple(map(float, p)) for p in ends])
    polygon = [tuple(map(float, unique[i])) for i in hull.vertices]
    return _canonical_start(_drop_collinear(polygon))


def _argmax_along(points: np.ndarray, directions: np.ndarray) -> np.ndarray:
    best_value = np.full(directions.shape[0], -np.inf)
    best_index = np.zeros(directions.shape[0], dtype=int)
    for start in range(0, points.shape[0], SUPPORT_BATCH):
        block = points[start:start + SUPPORT_BATCH]
        scores = directions @ block.T
        local = np.argmax(scores, axis=1)
        value = scores[np.arange(directions.shape[0]), local]
        better = value > best_value
        best_value[better] = value[better]
        best_index[better] = local[better] + start
    return best_index


def support_polygon(N: int, f1: LinearFunctional, f2: LinearFunctional, angles: int = 720) -> List[Point2D]:
    """
    The projected polygon reconstructed from its support function: maximizers
    at `angles` uniform directions, then each gap between consecutive
    maximizers is probed along the outward normal of their chord until no
    point lies beyond it.
    """
    matrix = _plane_matrix(f1, f2)
    points = np.unique(_projected_candidates(N, matrix), axis=0)
    theta = 2 * np.pi * np.arange(angles) / angles
    directions = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    indices = _argmax_along(points, directions)
    ordered: List[int] = []
    for i in indices.tolist():
        if not ordered or ordered[-1] != i:
            ordered.append(i)
    if len(ordered) > 1 and ordered[0] == ordered[-1]:
        ordered.pop()

    def refine(i: int, j: int) -> List[int]:
        chord = points[j] - points[i]
        normal = np.array([chord[1], -chord[0]])
        if not np.any(normal):
            return []
        k = int(_argmax_along(points, normal[None, :])[0])
        excess = normal @ points[k] - normal @ points[i]
        if excess <= SUPPORT_TOLERANCE * max(1.0, float(np.abs(normal).max()) * float(np.abs(points[i]).max())):
            return []
        return refine(i, k) + [k] + refine(k, j)

    polygon: List[int] = []
    for pos, i in enumerate(ordered):
        j = ordered[(pos + 1) % len(ordered)]
        polygon.append(i)
        if len(ordered) > 1:
            polygon.extend(refine(i, j))
    return _canonical_start(_drop_collinear([tuple(map(float, points[i])) for i in polygon]))


def polygon_ray_radius(polygon: Sequence[Point2D], direction: Point2D) -> float:
    """Largest r >= 0 with r * direction inside the counter-clockwise polygon; nan when the ray misses it."""
    if len(polygon) < 3:
        return float("nan")
    u = np.asarray(direction, dtype=float)
    upper, lower = np.inf, 0.0
    for a, b in zip(polygon, list(polygon[1:]) + [polygon[0]]):
        a, b = np.asarray(a), np.asarray(b)
        edge = b - a
        normal = np.array([edge[1], -edge[0]])
        offset = normal @ a
        rate = normal @ u
        if rate > 0:
            upper = min(upper, offset / rate)
        elif rate < 0:
            lower = max(lower, offset / rate)
        elif offset < 0:
            return float("nan")
    return float(upper) if upper >= lower else float("nan")


def relaxed_surface_point(x: Sequence[float], N: int) -> CorrelatorVector:
    """Correlators at real strategy counts: a point of the variety whose hull is the first relaxation."""
    return vertex_correlators(x.x if isinstance(x, StrategyCounts) else x, N)


def section_polygon(N: int, u: np.ndarray, v: np.ndarray, rays: int = 360, workers: int = 1) -> List[Point2D]:
    """
    The polytope's section by the plane {a*u + b*v}, traced by ray LPs at
    `rays` uniform angles and returned as a counter-clockwise polygon.
    """
    unit = [LinearFunctional(coefficients={name: 1}) for name in CORRELATOR_NAMES]
    thetas = 2 * np.pi * np.arange(rays) / rays

    def radius(theta: float) -> float:
        return ray_radius(unit, (np.cos(theta) * u + np.sin(theta) * v).tolist(), N)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        radii = list(pool.map(radius, thetas))
    points = np.array([(r * np.cos(t), r * np.sin(t)) for r, t in zip(radii, thetas) if np.isfinite(r)])
    if points.shape[0] < 3:
        return _canonical_start([tuple(map(float, p)) for p in points])
    hull = points[ConvexHull(points).vertices]
    return _canonical_start(_drop_collinear([tuple(map(float, p)) for p in hull]))
