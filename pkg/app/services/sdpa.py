"""
Sparse SDPA ("*.dat-s") writer and reader.

SDPA states problems as

    minimize    sum_i c_i x_i
    subject to  sum_i F_i x_i - F_0  >= 0

so an SdpProblem (maximize objective . w with constant + sum_k w_k M_k >= 0)
is written with c = -objective, F_i = M_i and F_0 = -constant. The objective
offset of lambda problems rides in the title line as "objective_offset",
so lambda = objective_offset - (SDPA primal optimum).
"""
from typing import List

import numpy as np

from app.config import settings
from app.core.exceptions import ValidationError
from app.schemas.sdp import SdpProblem


def _fmt(value: float) -> str:
    text = format(float(value), ".17g")
    return "0" if text == "-0" else text


def export_standard(problem: SdpProblem) -> str:
    """Write the problem in sparse SDPA format with LF line endings."""
    n = problem.num_variables
    lines = [
        f'"format_version {settings.FORMAT_VERSION} kind {problem.kind} objective_offset {_fmt(problem.objective_offset)}',
        str(n),
        str(len(problem.block_sizes)),
        " ".join(str(k) for k in problem.block_sizes),
        " ".join(_fmt(-c) for c in problem.objective) if n else "",
    ]
    for block_no, constant in enumerate(problem.constant, start=1):
        lines.extend(_entries(0, block_no, -constant))
    for block_no, matrices in enumerate(problem.matrices, start=1):
        for mat_no in range(n):
            lines.extend(_entries(mat_no + 1, block_no, matrices[mat_no]))
    return "\n".join(lines) + "\n"


def _entries(mat_no: int, block_no: int, matrix: np.ndarray) -> List[str]:
    rows, cols = np.nonzero(np.triu(matrix))
    return [
        f"{mat_no} {block_no} {i + 1} {j + 1} {_fmt(matrix[i, j])}"
        for i, j in zip(rows.tolist(), cols.tolist())
    ]


def _numbers(line: str) -> List[str]:
    for ch in ",{}()":
        line = line.replace(ch, " ")
    return line.split()


def _title_offset(text: str) -> float:
    for line in text.splitlines():
        line = line.strip()
        if not line.startswith('"'):
            continue
        fields = line.strip('"').split()
        if "objective_offset" not in fields[:-1]:
            return 0.0
        try:
            return float(fields[fields.index("objective_offset") + 1])
        except ValueError as exc:
            raise ValidationError(f"malformed objective_offset in title: {line!r}") from exc
    return 0.0


def parse_sdpa(text: str) -> SdpProblem:
    """Read sparse SDPA text back into an SdpProblem of kind "generic"."""
    lines = [line.strip() for line in text.splitlines()]
    lines = [line for line in lines if line and line[0] not in '"*']
    if len(lines) < 3:
        raise ValidationError("SDPA text is truncated")
    try:
        n = int(_numbers(lines[0])[0])
        n_blocks = int(_numbers(lines[1])[0])
        sizes = [int(v) for v in _numbers(lines[2])[:n_blocks]]
    except (IndexError, ValueError) as exc:
        raise ValidationError(f"malformed SDPA header: {exc}") from exc
    if len(sizes) != n_blocks:
        raise ValidationError("block structure does not match nBLOCK")
    if any(k <= 0 for k in sizes):
        raise ValidationError("diagonal (LP) blocks are not supported")

    cursor = 3
    if n:
        objective = np.array([-float(v) for v in _numbers(lines[cursor])[:n]])
        if objective.size != n:
            raise ValidationError("objective row does not have mDIM entries")
        cursor += 1
    else:
        objective = np.zeros(0)

    constant = [np.zeros((k, k)) for k in sizes]
    matrices = [np.zeros((n, k, k)) for k in sizes]
    for line in lines[cursor:]:
        fields = _numbers(line)
        try:
            mat_no, block_no, i, j = (int(v) for v in fields[:4])
            value = float(fields[4])
        except (IndexError, ValueError) as exc:
            raise ValidationError(f"malformed SDPA entry {line!r}") from exc
        if not (0 <= mat_no <= n and 1 <= block_no <= n_blocks):
            raise ValidationError(f"SDPA entry out of range: {line!r}")
        k = sizes[block_no - 1]
        if not (1 <= i <= k and 1 <= j <= k):
            raise ValidationError(f"SDPA entry index out of range: {line!r}")
        target = constant[block_no - 1] if mat_no == 0 else matrices[block_no - 1][mat_no - 1]
        value = -value if mat_no == 0 else value
        target[i - 1, j - 1] = value
        target[j - 1, i - 1] = value
    return SdpProblem(
        block_sizes=sizes,
        constant=constant,
        matrices=matrices,
        objective=objective,
        objective_offset=_title_offset(text),
    )
