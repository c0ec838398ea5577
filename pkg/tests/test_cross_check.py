"""Exported problems solved by an independent conic solver. Run with `pytest -m slow`."""
import numpy as np
import pytest

from app.schemas.correlators import PointConstraint
from app.schemas.sdp import SdpProblem
from app.services.certification import get_template
from app.services.moment_builder import assemble_lambda_max
from app.services.sdp_engine import solve
from app.services.sdpa import export_standard, parse_sdpa
from tests.helpers import EXPERIMENT_N, experiment_constraints


cp = pytest.importorskip("cvxpy")

pytestmark = pytest.mark.slow


def external_optimum(problem: SdpProblem) -> float:
    """maximize objective . w + offset over the LMI, solved by cvxpy."""
    n = problem.num_variables
    w = cp.Variable(n)
    constraints = []
    for constant, matrices in zip(problem.constant, problem.matrices):
        k = constant.shape[0]
        block = cp.Variable((k, k), symmetric=True)
        affine = constant + sum(w[j] * matrices[j] for j in range(n))
        constraints += [block >> 0, block == affine]
    program = cp.Problem(cp.Maximize(problem.objective @ w + problem.objective_offset), constraints)
    if cp.CLARABEL in cp.installed_solvers():
        program.solve(solver=cp.CLARABEL)
    else:
        program.solve(solver=cp.SCS, eps_abs=1e-10, eps_rel=1e-10, max_iters=200000)
    assert program.status == cp.OPTIMAL, program.status
    return float(program.value)


def test_support_along_s0_matches():
    problem = assemble_lambda_max(get_template(1, 10), [PointConstraint.of({"S0": 1}, 1.0)])
    external = external_optimum(parse_sdpa(export_standard(problem)))
    assert external == pytest.approx(10.0, abs=1e-5)
    assert solve(problem).value == pytest.approx(external, abs=1e-5)


def test_experimental_problem_matches():
    problem = assemble_lambda_max(get_template(1, EXPERIMENT_N), experiment_constraints())
    internal = solve(problem)
    assert internal.optimal
    external = external_optimum(parse_sdpa(export_standard(problem)))
    assert internal.value == pytest.approx(external, abs=1e-5)
    assert np.isfinite(external) and external < 1
