"""
Certification workflows shared by the CLI and the HTTP API: certify a
statistic, scan a plane, compute hulls and classical bounds, export SDPs.
"""
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.config import settings
from app.core.exceptions import BudgetExceededError, CertifierException, ValidationError
from app.schemas.certify import (
    BoundReport,
    BoundRequest,
    CertifyReport,
    CertifyRequest,
    ExportRequest,
    HullReport,
    HullRequest,
    PlaneSpec,
    ScanReport,
    ScanRequest,
    ScanRow,
)
from app.schemas.correlators import CORRELATOR_NAMES, BellInequality, LinearFunctional, PointConstraint
from app.schemas.sdp import SdpOutcome
from app.services import polytope_oracle
from app.services.moment_builder import (
    MomentTemplate,
    assemble_feasibility,
    assemble_lambda_max,
    build_template,
    condition_template,
)
from app.services.scenario import check_budget
from app.services.sdp_engine import bisect_segment, extract_bell_inequality, solve, validate_certificate
from app.services.sdpa import export_standard


logger = logging.getLogger(__name__)

NONLOCAL = "nonlocal"
NO_VIOLATION = "no-violation-at-this-level"
INCONCLUSIVE = "inconclusive"

CLASSICAL_TOLERANCE = 1e-6


@lru_cache(maxsize=16)
def get_template(mu: int, N: int, shared: bool = False) -> MomentTemplate:
    """Conditioned template, built once per (mu, N, shared) and shared read-only across solves."""
    return condition_template(build_template(mu, N, shared=shared), N)


def resolve_threads(threads: Optional[int]) -> int:
    threads = settings.DEFAULT_THREADS if threads is None else threads
    return threads if threads and threads > 0 else (os.cpu_count() or 1)


def lambda_max(template: MomentTemplate, direction: Sequence[PointConstraint]) -> SdpOutcome:
    return solve(assemble_lambda_max(template, direction))


def _classical_check(inequality: BellInequality, N: int, workers: int = 1) -> Optional[dict]:
    try:
        check_budget(N)
    except BudgetExceededError as exc:
        logger.warning("classical check skipped: %s", exc.message)
        return None
    minimum, argmin = polytope_oracle.classical_minimum(inequality, N, workers)
    value = float(minimum) + float(inequality.betaC)
    return {"minimum": value, "argmin": list(argmin), "valid": value >= -CLASSICAL_TOLERANCE}


def _certified(outcome: SdpOutcome, N: int, workers: int) -> Tuple[dict, dict, Optional[dict]]:
    inequality = extract_bell_inequality(outcome)
    report = validate_certificate(inequality, outcome)
    check = _classical_check(inequality, N, workers)
    inequality = inequality.model_copy(update={"verified": bool(check and check["valid"])})
    return inequality.to_response(), report.to_response(), check


def certify(request: CertifyRequest, tolerance: Optional[float] = None, threads: Optional[int] = None) -> CertifyReport:
    """
    Decide the request at level mu.

    lambda mode maximizes lambda along the ray through the fixed values and
    declares nonlocality when lambda_max < 1 - tolerance. When the ray's
    anchor is infeasible or the problem is unbounded, the boundary is found
    by bisection on feasibility solves instead. feasibility mode solves the
    maximal-margin feasibility problem and declares nonlocality on an
    infeasibility certificate with margin at least CERTIFICATE_MARGIN.
    """
    tolerance = settings.NONLOCALITY_TOLERANCE if tolerance is None else tolerance
    workers = resolve_threads(threads)
    template = get_template(request.mu, request.N, request.shared)
    constraints = request.point_constraints()
    common = dict(N=request.N, mu=request.mu, mode=request.mode, tolerance=tolerance)

    if request.mode == "feasibility":
        outcome = solve(assemble_feasibility(template, constraints))
        solver = outcome.stats.to_response()
        if outcome.infeasible and outcome.margin is not None and outcome.margin >= settings.CERTIFICATE_MARGIN:
            inequality, certificate, check = _certified(outcome, request.N, workers)
            return CertifyReport(
                verdict=NONLOCAL, method="feasibility", margin=outcome.margin, inequality=inequality,
                certificate=certificate, classical_check=check, solver=solver, **common,
            )
        if outcome.optimal:
            return CertifyReport(verdict=NO_VIOLATION, method="feasibility", margin=outcome.margin, solver=solver, **common)
        return CertifyReport(
            verdict=INCONCLUSIVE, method="feasibility", margin=outcome.margin, solver=solver,
            message=f"solver status {outcome.status}", **common,
        )

    outcome = lambda_max(template, constraints)
    solver = outcome.stats.to_response()
    if outcome.optimal:
        value = float(outcome.value)
        if value < 1 - tolerance:
            inequality, certificate, check = _certified(outcome, request.N, workers)
            return CertifyReport(
                verdict=NONLOCAL, method="lambda", lambda_max=value, inequality=inequality,
                certificate=certificate, classical_check=check, solver=solver, **common,
            )
        return CertifyReport(verdict=NO_VIOLATION, method="lambda", lambda_max=value, solver=solver, **common)

    if outcome.status in ("infeasible", "unbounded"):
        logger.info("lambda problem %s; falling back to bisection", outcome.status)
        try:
            t = bisect_segment(template, constraints)
        except CertifierException as exc:
            return CertifyReport(verdict=INCONCLUSIVE, method="bisection", solver=solver, message=exc.message, **common)
        if t < 1 - tolerance:
            feasibility = solve(assemble_feasibility(template, constraints))
            if feasibility.infeasible:
                inequality, certificate, check = _certified(feasibility, request.N, workers)
                return CertifyReport(
                    verdict=NONLOCAL, method="bisection", lambda_max=t, margin=feasibility.margin,
                    inequality=inequality, certificate=certificate, classical_check=check,
                    solver=feasibility.stats.to_response(), **common,
                )
            return CertifyReport(
                verdict=INCONCLUSIVE, method="bisection", lambda_max=t, solver=feasibility.stats.to_response(),
                message="bisection and feasibility solves disagree", **common,
            )
        return CertifyReport(verdict=NO_VIOLATION, method="bisection", lambda_max=t, solver=solver, **common)

    return CertifyReport(
        verdict=INCONCLUSIVE, method="lambda", solver=solver, message=f"solver status {outcome.status}", **common,
    )


def _unit_functionals() -> List[LinearFunctional]:
    return [LinearFunctional(coefficients={name: 1}) for name in CORRELATOR_NAMES]


def _check_plane(plane: PlaneSpec) -> None:
    first, second = plane.vectors()
    if not np.any(first) or not np.any(second):
        raise ValidationError("plane axes must be non-zero")
    if np.linalg.matrix_rank(np.vstack([first, second])) < 2:
        raise ValidationError("plane axes must be linearly independent")


def ray_constraints(plane: PlaneSpec, theta: float) -> List[PointConstraint]:
    """Constraints fixing the plane point (cos theta, sin theta), scaled by lambda in a lambda problem."""
    c, s = float(np.cos(theta)), float(np.sin(theta))
    if plane.kind == "projection":
        first, second = plane.functionals()
        return [PointConstraint(functional=first, value=c), PointConstraint(functional=second, value=s)]
    u, v = plane.vectors()
    point = c * u + s * v
    return [PointConstraint(functional=f, value=float(x)) for f, x in zip(_unit_functionals(), point)]


def _ray_lambda(template: MomentTemplate, constraints: List[PointConstraint]) -> Optional[float]:
    outcome = lambda_max(template, constraints)
    if outcome.optimal:
        return float(outcome.value)
    if outcome.status in ("infeasible", "unbounded"):
        try:
            return bisect_segment(template, constraints)
        except CertifierException as exc:
            logger.warning("bisection failed: %s", exc.message)
    return None


def scan(request: ScanRequest, threads: Optional[int] = None) -> ScanReport:
    """
    lambda_sdp and r_hull on uniformly spaced rays of the plane. Rays are
    solved concurrently; workers share only the immutable template.
    """
    plane = request.plane
    _check_plane(plane)
    rays = settings.DEFAULT_RAYS if request.rays is None else request.rays
    thetas = [2 * np.pi * i / rays for i in range(rays)]
    template = get_template(request.mu, request.N, request.shared)
    workers = resolve_threads(threads)
    warnings: List[str] = []

    polygon = None
    with_hull = True
    try:
        check_budget(request.N)
        if plane.kind == "projection":
            polygon = polytope_oracle.project_2d(request.N, *plane.functionals(), workers=workers)
    except BudgetExceededError as exc:
        with_hull = False
        warnings.append(f"r_hull omitted: {exc.message}")
        logger.warning("r_hull omitted: %s", exc.message)

    def row(theta: float) -> ScanRow:
        constraints = ray_constraints(plane, theta)
        lam = _ray_lambda(template, constraints)
        r_hull = None
        if with_hull:
            direction = (float(np.cos(theta)), float(np.sin(theta)))
            if polygon is not None:
                r_hull = polytope_oracle.polygon_ray_radius(polygon, direction)
            else:
                r_hull = polytope_oracle.ray_radius(
                    [c.functional for c in constraints], [c.value for c in constraints], request.N
                )
        return ScanRow(theta=float(theta), lambda_sdp=lam, r_hull=r_hull)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(row, thetas))
    failed = sum(1 for r in rows if r.lambda_sdp is None)
    if failed:
        warnings.append(f"{failed} ray(s) ended in numerical failure")
    logger.info("scan N=%d mu=%d finished %d rays", request.N, request.mu, rays)
    return ScanReport(N=request.N, mu=request.mu, kind=plane.kind, rows=rows, warnings=warnings)


def hull(request: HullRequest, threads: Optional[int] = None) -> HullReport:
    """Projected polygon, or for slices the section polygon traced by ray LPs."""
    plane = request.plane
    _check_plane(plane)
    workers = resolve_threads(threads)
    if plane.kind == "projection":
        vertices = polytope_oracle.project_2d(request.N, *plane.functionals(), workers=workers)
    else:
        u, v = plane.vectors()
        rays = settings.DEFAULT_RAYS if request.rays is None else request.rays
        vertices = polytope_oracle.section_polygon(request.N, u, v, rays, workers=workers)
    return HullReport(N=request.N, kind=plane.kind, vertices=vertices)


def bound(request: BoundRequest, threads: Optional[int] = None) -> BoundReport:
    """Minimum of alpha . S + betaC over all vertices."""
    inequality = request.inequality
    minimum, argmin = polytope_oracle.classical_minimum(inequality, request.N, resolve_threads(threads))
    exact = not isinstance(minimum, float) and not isinstance(inequality.betaC, float)
    if exact:
        total = Fraction(minimum) + Fraction(inequality.betaC)
        tight = total == 0
        text = str(total)
    else:
        total = float(minimum) + float(inequality.betaC)
        tight = abs(total) <= 1e-9
        text = None
    return BoundReport(N=request.N, minimum=float(total), exact_minimum=text, tight=tight, argmin=argmin)


def export(request: ExportRequest) -> str:
    template = get_template(request.mu, request.N, request.shared)
    constraints = request.point_constraints()
    if request.mode == "lambda":
        problem = assemble_lambda_max(template, constraints)
    else:
        problem = assemble_feasibility(template, constraints)
    return export_standard(problem)
