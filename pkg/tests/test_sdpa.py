import numpy as np
import pytest

from app.core.exceptions import ValidationError
from app.schemas.correlators import PointConstraint
from app.services.moment_builder import assemble_feasibility, assemble_lambda_max
from app.services.sdp_engine import solve
from app.services.sdpa import export_standard, parse_sdpa


def test_header_of_level_one_problem(template_n10):
    problem = assemble_feasibility(template_n10, [])
    text = export_standard(problem)
    lines = text.split("\n")
    assert lines[0] == '"format_version 1.0 kind feasibility objective_offset 0'
    assert lines[1] == str(problem.num_variables)
    assert lines[2] == "5"
    assert lines[3] == "6 6 6 6 6"
    assert "\r" not in text
    assert text.endswith("\n")


def test_entries_are_one_based_upper_triangular(template_n10):
    text = export_standard(assemble_feasibility(template_n10, []))
    for line in text.split("\n")[5:]:
        if not line:
            continue
        mat_no, block_no, i, j, value = line.split()
        assert 1 <= int(block_no) <= 5
        assert 1 <= int(i) <= int(j) <= 6
        assert value != "-0"
        float(value)


def test_round_trip_reproduces_the_problem(template_n10):
    problem = assemble_lambda_max(template_n10, [PointConstraint.of({"S0": 1}, 3.0)])
    parsed = parse_sdpa(export_standard(problem))
    assert parsed.block_sizes == problem.block_sizes
    np.testing.assert_array_equal(parsed.objective, problem.objective)
    for a, b in zip(parsed.constant, problem.constant):
        np.testing.assert_array_equal(a, b)
    for a, b in zip(parsed.matrices, problem.matrices):
        np.testing.assert_array_equal(a, b)


def test_objective_offset_travels_in_the_title(template_n10):
    problem = assemble_lambda_max(template_n10, [PointConstraint.of({"S0": 1}, 3.0), PointConstraint.of({"S11": 1}, 2.0)])
    text = export_standard(problem)
    assert text.split("\n")[0].split()[-2] == "objective_offset"
    assert parse_sdpa(text).objective_offset == problem.objective_offset


def test_parsed_problem_solves_to_the_same_value(template_n10):
    problem = assemble_lambda_max(template_n10, [PointConstraint.of({"S0": 1}, 1.0)])
    direct = solve(problem)
    parsed = solve(parse_sdpa(export_standard(problem)))
    assert parsed.optimal
    assert parsed.value == pytest.approx(direct.value, abs=1e-6)


def test_parse_accepts_comments_and_punctuation():
    text = "* comment\n\"title\n1\n1\n{2}\n-1.0\n0 1 1 1 -1\n0 1 2 2 -1\n1 1 1 2 1\n"
    problem = parse_sdpa(text)
    np.testing.assert_array_equal(problem.constant[0], np.eye(2))
    np.testing.assert_array_equal(problem.matrices[0][0], [[0, 1], [1, 0]])
    np.testing.assert_array_equal(problem.objective, [1.0])


@pytest.mark.parametrize(
    "text",
    [
        "1\n1\n",
        "1\n1\n-2\n1\n",
        "1\n1\n2\n1\n3 1 1 1 1\n",
        "1\n1\n2\n1\n1 1 3 1 1\n",
        "1\n1\n2\n1\n1 1 1\n",
    ],
)
def test_parse_rejects_malformed_text(text):
    with pytest.raises(ValidationError):
        parse_sdpa(text)
