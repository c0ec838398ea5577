"""
Revised simplex over streamed columns.

Solves  minimize c.w  subject to  A w = b, w >= 0  where the columns of A
arrive in chunks from a generator, so the vertex set of a large polytope
never has to be held in memory. Only the m x m basis is kept; every pricing
pass re-streams the columns.

Pricing is Dantzig within the first chunk holding an improving column.
After the first degenerate pivot of a phase the rule switches to Bland's
(first improving column by global index, ties in the ratio test broken by
smallest basic index) for the rest of that phase, so the method cannot
cycle.
"""
import logging
from typing import Callable, Iterable, List, NamedTuple, Optional, Tuple

import numpy as np

from app.config import settings


logger = logging.getLogger(__name__)


class ColumnChunk(NamedTuple):
    """Columns offset .. offset + k - 1: matrix (m, k), cost (k,), payload (k, p) or None."""
    offset: int
    matrix: np.ndarray
    cost: np.ndarray
    payload: Optional[np.ndarray] = None


ColumnSource = Callable[[], Iterable[ColumnChunk]]


class BasicColumn(NamedTuple):
    index: int
    value: float
    payload: Optional[Tuple]


class LpResult(NamedTuple):
    """
    status: optimal, infeasible, unbounded or stalled.

    `duals` are the simplex multipliers of the rows in the caller's sign
    convention: on infeasibility they are the Phase I multipliers, with
    duals . A_j <= 0 for every column and duals . b equal to the positive
    infeasibility.
    """
    status: str
    objective: float
    basis: List[BasicColumn]
    duals: np.ndarray
    infeasibility: float
    iterations: int


class StreamingSimplex:
    """Two-phase revised simplex; artificial columns carry negative indices."""

    def __init__(
        self,
        rhs: np.ndarray,
        columns: ColumnSource,
        tolerance: Optional[float] = None,
        max_iterations: Optional[int] = None,
        feasibility_tolerance: Optional[float] = None,
    ):
        self.tolerance = settings.LP_TOLERANCE if tolerance is None else tolerance
        self.max_iterations = settings.LP_MAX_ITERATIONS if max_iterations is None else max_iterations
        self.feasibility_tolerance = (
            settings.MEMBERSHIP_TOLERANCE if feasibility_tolerance is None else feasibility_tolerance
        )
        rhs = np.asarray(rhs, dtype=float)
        self.signs = np.where(rhs < 0, -1.0, 1.0)
        self.b = rhs * self.signs
        self.m = rhs.shape[0]
        self.columns = columns
        self.iterations = 0

        self.basis_index: List[int] = [-(i + 1) for i in range(self.m)]
        self.basis_matrix = np.eye(self.m)
        self.basis_cost = np.zeros(self.m)
        self.basis_payload: List[Optional[Tuple]] = [None] * self.m

    def _phase_costs(self, phase: int) -> np.ndarray:
        if phase == 1:
            return np.array([1.0 if j < 0 else 0.0 for j in self.basis_index])
        return np.array([0.0 if j < 0 else c for j, c in zip(self.basis_index, self.basis_cost)])

    def _price(self, duals: np.ndarray, phase: int, bland: bool):
        for chunk in self.columns():
            matrix = chunk.matrix * self.signs[:, None]
            cost = np.zeros(matrix.shape[1]) if phase == 1 else chunk.cost
            reduced = cost - duals @ matrix
            improving = np.flatnonzero(reduced < -self.tolerance)
            if improving.size == 0:
                continue
            local = int(improving[0]) if bland else int(np.argmin(reduced))
            payload = None if chunk.payload is None else tuple(chunk.payload[local].tolist())
            return chunk.offset + local, matrix[:, local].copy(), float(chunk.cost[local]), payload
        return None

    def _ratio(self, x_basic: np.ndarray, direction: np.ndarray, phase: int) -> Optional[int]:
        best, best_ratio = None, np.inf
        for i in range(self.m):
            if phase == 2 and self.basis_index[i] < 0 and abs(direction[i]) > self.tolerance:
                ratio = 0.0
            elif direction[i] > self.tolerance:
                ratio = max(x_basic[i], 0.0) / direction[i]
            else:
                continue
            if ratio < best_ratio - self.tolerance or (
                abs(ratio - best_ratio) <= self.tolerance and self.basis_index[i] < self.basis_index[best]
            ):
                best, best_ratio = i, ratio
        return best

    def _run(self, phase: int) -> str:
        bland = False
        while True:
            if self.iterations >= self.max_iterations:
                return "stalled"
            x_basic = np.linalg.solve(self.basis_matrix, self.b)
            duals = np.linalg.solve(self.basis_matrix.T, self._phase_costs(phase))
            entering = self._price(duals, phase, bland)
            if entering is None:
                return "optimal"
            index, column, cost, payload = entering
            direction = np.linalg.solve(self.basis_matrix, column)
            leaving = self._ratio(x_basic, direction, phase)
            if leaving is None:
                return "unbounded"
            step = max(x_basic[leaving], 0.0) / direction[leaving] if direction[leaving] > 0 else 0.0
            if step <= self.tolerance and not bland:
                bland = True
            self.basis_index[leaving] = index
            self.basis_matrix[:, leaving] = column
            self.basis_cost[leaving] = cost
            self.basis_payload[leaving] = payload
            self.iterations += 1

    def _result(self, status: str, phase: int) -> LpResult:
        x_basic = np.linalg.solve(self.basis_matrix, self.b)
        duals = np.linalg.solve(self.basis_matrix.T, self._phase_costs(phase)) * self.signs
        basis = [
            BasicColumn(j, float(v), p)
            for j, v, p in zip(self.basis_index, x_basic, self.basis_payload)
            if j >= 0
        ]
        infeasibility = float(sum(v for j, v in zip(self.basis_index, x_basic) if j < 0))
        objective = float(sum(c * v for j, c, v in zip(self.basis_index, self.basis_cost, x_basic) if j >= 0))
        logger.debug(
            "simplex phase %d finished %s after %d pivots (infeasibility %.3e, objective %.9g)",
            phase, status, self.iterations, infeasibility, objective,
        )
        return LpResult(status, objective, basis, duals, infeasibility, self.iterations)

    def feasible_point(self) -> LpResult:
        """Phase I only."""
        status = self._run(1)
        if status != "optimal":
            return self._result(status, 1)
        result = self._result("optimal", 1)
        if result.infeasibility > self.feasibility_tolerance:
            return result._replace(status="infeasible")
        return result

    def solve(self) -> LpResult:
        """Phase I followed by Phase II on the true costs."""
        first = self.feasible_point()
        if first.status != "optimal":
            return first
        status = self._run(2)
        return self._result(status, 2)
