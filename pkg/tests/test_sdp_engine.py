import numpy as np
import pytest

from app.config import settings
from app.schemas.correlators import BellInequality, PointConstraint
from app.schemas.sdp import SdpOutcome, SdpProblem
from app.services import polytope_oracle
from app.services.certification import get_template
from app.services.moment_builder import assemble_feasibility, assemble_lambda_max, build_template
from app.services.scenario import vertex_correlators
from app.services.sdp_engine import (
    bisect_segment,
    extract_bell_inequality,
    original_duals,
    relaxation_barycenter,
    solve,
    validate_certificate,
)
from tests.helpers import EXPERIMENT_N, experiment_constraints, fixing_constraints


def generic(constant, matrices, objective):
    return SdpProblem(
        block_sizes=[c.shape[0] for c in constant],
        constant=[np.asarray(c, dtype=float) for c in constant],
        matrices=[np.asarray(m, dtype=float) for m in matrices],
        objective=np.asarray(objective, dtype=float),
    )


def test_small_generic_optimum():
    # maximize w subject to [[1, w], [w, 1]] >= 0
    problem = generic([np.eye(2)], [[[[0, 1], [1, 0]]]], [1.0])
    outcome = solve(problem)
    assert outcome.optimal
    assert outcome.value == pytest.approx(1.0, abs=1e-7)
    assert outcome.stats.primal_residual <= settings.SDP_FEASIBILITY_TOLERANCE
    assert outcome.stats.dual_residual <= settings.SDP_FEASIBILITY_TOLERANCE
    assert outcome.stats.iterations < settings.SDP_MAX_ITERATIONS


def test_unreachable_tolerances_fall_back_to_the_best_iterate():
    problem = generic([np.eye(2)], [[[[0, 1], [1, 0]]]], [1.0])
    outcome = solve(problem, feasibility_tolerance=0.0, gap_tolerance=0.0)
    assert outcome.optimal
    assert outcome.value == pytest.approx(1.0, abs=1e-6)
    assert outcome.stats.primal_residual <= settings.SDP_REDUCED_TOLERANCE


def test_generic_infeasible():
    # diag(-1 + w, -1 - w) >= 0 has no solution
    problem = generic([-np.eye(2)], [[np.diag([1.0, -1.0])]], [0.0])
    outcome = solve(problem)
    assert outcome.infeasible
    z = outcome.dual[0]
    assert np.linalg.eigvalsh(z)[0] >= -1e-9
    assert float(np.vdot(-np.eye(2), z)) < 0


def test_objective_outside_the_span_is_unbounded():
    problem = generic([np.eye(2)], [np.zeros((1, 2, 2))], [1.0])
    assert solve(problem).status == "unbounded"


def test_vertex_point_is_feasible(template_n10):
    outcome = solve(assemble_feasibility(template_n10, fixing_constraints((10, 10, 90, 90, 90))))
    assert outcome.optimal
    assert outcome.y[0] == pytest.approx(1.0)


def test_no_fixings_is_strictly_feasible(template_n10):
    outcome = solve(assemble_feasibility(template_n10, []))
    assert outcome.optimal
    assert outcome.margin > 0


def test_s0_beyond_support_is_infeasible(template_n10):
    outcome = solve(assemble_feasibility(template_n10, [PointConstraint.of({"S0": 1}, 20.0)]))
    assert outcome.infeasible
    assert outcome.margin >= 1e-8
    total = sum(np.trace(z) for z in outcome.dual)
    assert total == pytest.approx(1.0)


def test_lambda_along_s0_is_the_support(template_n10):
    outcome = solve(assemble_lambda_max(template_n10, [PointConstraint.of({"S0": 1}, 1.0)]))
    assert outcome.optimal
    assert outcome.value == pytest.approx(10.0, abs=1e-5)


def test_lambda_along_s0_at_large_n():
    outcome = solve(assemble_lambda_max(get_template(1, EXPERIMENT_N), [PointConstraint.of({"S0": 1}, 1.0)]))
    assert outcome.optimal
    assert outcome.value == pytest.approx(EXPERIMENT_N, rel=1e-7)
    assert outcome.stats.primal_residual <= settings.SDP_FEASIBILITY_TOLERANCE


def test_experimental_direction_at_large_n():
    outcome = solve(assemble_lambda_max(get_template(1, EXPERIMENT_N), experiment_constraints()))
    assert outcome.optimal
    assert outcome.value < 1 - 1e-4
    assert outcome.stats.primal_residual <= settings.SDP_FEASIBILITY_TOLERANCE
    assert outcome.stats.dual_residual <= settings.SDP_FEASIBILITY_TOLERANCE


def test_vertex_point_at_large_n_is_feasible():
    vertex = vertex_correlators((EXPERIMENT_N, 0, 0, 0), EXPERIMENT_N).as_array()
    outcome = solve(assemble_feasibility(get_template(1, EXPERIMENT_N), fixing_constraints(vertex)))
    assert outcome.optimal


def test_lambda_at_a_vertex_direction(template_n10):
    outcome = solve(assemble_lambda_max(template_n10, fixing_constraints((3, 3, 2, 2))[:2]))
    assert outcome.optimal
    assert outcome.value >= 1 - 1e-6


def test_extracted_inequality_along_s0(template_n10):
    outcome = solve(assemble_lambda_max(template_n10, [PointConstraint.of({"S0": 1}, 1.0)]))
    inequality = extract_bell_inequality(outcome)
    assert float(inequality.alpha["S0"]) == pytest.approx(-1.0, abs=1e-6)
    assert float(inequality.alpha["S00"]) == pytest.approx(0.0, abs=1e-6)
    assert float(inequality.betaC) == pytest.approx(10.0, abs=1e-5)
    report = validate_certificate(inequality, outcome)
    assert report.passed, report.to_response()


def test_lambda_bound_comes_from_the_constant_moment_dual(template_n10):
    outcome = solve(assemble_lambda_max(template_n10, [PointConstraint.of({"S0": 1}, 1.0)]))
    inequality = extract_bell_inequality(outcome)
    n = template_n10.num_moments
    constant_weight = sum(
        float(np.vdot(z, block.exact_matrices_float(n)[0]))
        for block, z in zip(template_n10.blocks, original_duals(outcome, template_n10))
    )
    assert float(inequality.betaC) == pytest.approx(constant_weight * inequality.dual_scale, rel=1e-12)
    assert float(inequality.betaC) == pytest.approx(outcome.value, abs=1e-6)


def test_extracted_inequality_is_tight_at_the_boundary(template_n10):
    direction = [PointConstraint.of({"S0": 1}, 1.0), PointConstraint.of({"S00": 1, "S01": 2, "S11": 1}, -2.0)]
    outcome = solve(assemble_lambda_max(template_n10, direction))
    assert outcome.optimal
    inequality = extract_bell_inequality(outcome)
    lam = outcome.value
    # alpha lies in the span of the direction's functionals: a1 S0 + a2 (S00 + 2 S01 + S11)
    a1, a2 = float(inequality.alpha["S0"]), float(inequality.alpha["S00"])
    assert float(inequality.alpha["S01"]) == pytest.approx(2 * a2, abs=1e-9)
    assert float(inequality.alpha["S1"]) == pytest.approx(0.0, abs=1e-12)
    assert a1 * 1.0 + a2 * -2.0 == pytest.approx(-1.0, abs=1e-9)
    assert a1 * lam + a2 * (-2.0 * lam) + float(inequality.betaC) == pytest.approx(0.0, abs=1e-6)
    assert validate_certificate(inequality, outcome).passed


def test_extracted_feasibility_certificate_separates(template_n10):
    outcome = solve(assemble_feasibility(template_n10, [PointConstraint.of({"S0": 1}, 20.0)]))
    inequality = extract_bell_inequality(outcome)
    at_query = float(inequality.alpha["S0"]) * 20.0 + float(inequality.betaC)
    assert at_query == pytest.approx(-1.0, abs=1e-6)
    assert validate_certificate(inequality, outcome).passed
    minimum, _ = polytope_oracle.classical_minimum(inequality, 10)
    assert float(minimum) + float(inequality.betaC) >= -1e-6


def test_original_duals_undo_conditioning(template_n10):
    outcome = solve(assemble_feasibility(template_n10, [PointConstraint.of({"S0": 1}, 20.0)]))
    duals = original_duals(outcome, template_n10)
    for block, z, original in zip(template_n10.blocks, outcome.dual, duals):
        d = block.congruence
        np.testing.assert_allclose(original, d[:, None] * z * d[None, :])


def test_trivial_certificate_passes_and_perturbation_fails():
    template = build_template(1, 10)
    duals = [np.zeros((6, 6)) for _ in template.blocks]
    duals[0][0, 0] = 1.0
    trivial = BellInequality(alpha={}, betaC=1)
    report = validate_certificate(trivial, SdpOutcome(status="infeasible", dual=duals), template=template)
    assert report.passed
    assert report.residual == 0.0

    perturbed = [z.copy() for z in duals]
    perturbed[0][1, 1] += 1e-2
    report = validate_certificate(trivial, SdpOutcome(status="infeasible", dual=perturbed), template=template)
    assert not report.passed
    assert report.residual > 1e-6


def test_relaxation_barycenter():
    np.testing.assert_allclose(relaxation_barycenter(10), [0, 0, 10, 0, 10])


def test_bisection_along_s0(template_n10):
    t = bisect_segment(template_n10, [PointConstraint.of({"S0": 1}, 20.0)])
    assert t == pytest.approx(0.5, abs=1e-5)


def test_solves_are_deterministic(template_n10):
    problem = assemble_lambda_max(template_n10, [PointConstraint.of({"S0": 1}, 1.0), PointConstraint.of({"S11": 1}, 3.0)])
    first, second = solve(problem), solve(problem)
    assert first.value == second.value
    np.testing.assert_array_equal(first.w, second.w)
