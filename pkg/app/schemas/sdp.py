from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class Elimination(BaseModel):
    """
    Affine parameterization of the equality-constrained variables.

    The full variable vector (conditioned moments y_1.. and, for lambda
    problems, lambda as the last entry) equals particular + basis @ w.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    labels: List[str]
    particular: np.ndarray
    basis: np.ndarray


class SdpProblem(BaseModel):
    """
    Block-diagonal SDP in linear-matrix-inequality form:

        maximize    objective . w + objective_offset
        subject to  constant[b] + sum_k w_k matrices[b][k]  >= 0   for every block b

    `kind` is "feasibility" (objective ignored), "lambda" or "generic".
    `template` and `constraints` are kept so duals can be mapped back to
    correlator space; they are absent for problems read from a file.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    block_sizes: List[int]
    constant: List[np.ndarray]
    matrices: List[np.ndarray]
    objective: np.ndarray
    objective_offset: float = 0.0
    kind: str = Field(default="generic", pattern="^(feasibility|lambda|generic)$")
    elimination: Optional[Elimination] = None
    template: Optional[Any] = None
    constraints: Optional[List[Any]] = None

    @property
    def num_variables(self) -> int:
        return int(self.objective.shape[0])

    def evaluate(self, w: np.ndarray) -> List[np.ndarray]:
        """Blocks of the affine matrix at w."""
        return [c + np.tensordot(w, m, axes=1) for c, m in zip(self.constant, self.matrices)]


class SolverStats(BaseModel):
    iterations: int = 0
    primal_residual: float = float("nan")
    dual_residual: float = float("nan")
    gap: float = float("nan")
    tau: float = float("nan")
    kappa: float = float("nan")
    min_eigenvalue: float = float("nan")

    def to_response(self) -> Dict[str, float]:
        return {k: (None if v != v else v) for k, v in self.model_dump().items()}


class SdpOutcome(BaseModel):
    """
    Result of a solve.

    status is one of optimal, infeasible, unbounded, numerical_failure.
    For feasibility problems `value` is the maximal margin t*; for lambda
    problems it is lambda_max. `dual` holds the dual matrix blocks of the
    problem (the infeasibility certificate when infeasible).
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    status: str = Field(..., pattern="^(optimal|infeasible|unbounded|numerical_failure)$")
    value: Optional[float] = None
    w: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    dual: Optional[List[np.ndarray]] = None
    margin: Optional[float] = None
    stats: SolverStats = Field(default_factory=SolverStats)
    problem: Optional[SdpProblem] = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    @property
    def infeasible(self) -> bool:
        return self.status == "infeasible"
