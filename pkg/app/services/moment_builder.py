"""
Moment matrices of the relaxation hierarchy.

For a level mu the basis b is the list of normal monomials of degree <= mu.
Block 0 is the moment matrix reduce(b_a * b_b); block i (i = 1..4) is the
localizing matrix reduce(g_i * b_a * b_b) of the strategy-count polynomial
g_i. Every entry is an exact polynomial in normal form; replacing each
monomial by a free variable y_j linearizes the blocks into
Gamma(y) = sum_j y_j Gamma_j with y_0 = 1 for the constant monomial.
"""
import logging
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from app.core.exceptions import InconsistentConstraintsError, UnsupportedScenarioError, ValidationError
from app.schemas.correlators import CORRELATOR_NAMES, CorrelatorVector, Number, PointConstraint
from app.schemas.sdp import Elimination, SdpProblem
from app.services.quotient_ring import (
    Monomial,
    Polynomial,
    constraint_polynomials,
    correlator_ideal,
    quotient_basis,
)
from app.services.scenario import Scenario


logger = logging.getLogger(__name__)

SUPPORTED_LEVELS = (1, 2)
CONSISTENCY_TOLERANCE = 1e-9


class MomentBlock:
    """One block of the relaxation: multiplier polynomial, exact entries and their linearization."""

    def __init__(
        self,
        name: str,
        multiplier: Polynomial,
        entries: List[List[Polynomial]],
        coefficients: Dict[int, Dict[Tuple[int, int], Fraction]],
        matrices: np.ndarray,
        congruence: Optional[np.ndarray] = None,
    ):
        self.name = name
        self.multiplier = multiplier
        self.entries = entries
        self.coefficients = coefficients
        self.matrices = matrices
        self.congruence = np.ones(len(entries)) if congruence is None else congruence

    @property
    def size(self) -> int:
        return len(self.entries)

    def exact_matrix(self, j: int) -> List[List[Fraction]]:
        k = self.size
        dense = [[Fraction(0)] * k for _ in range(k)]
        for (a, b), coef in self.coefficients.get(j, {}).items():
            dense[a][b] = Fraction(coef)
        return dense

    def exact_matrices_float(self, n: int) -> np.ndarray:
        """Unconditioned Gamma_j as floats, shape (n, k, k)."""
        out = np.zeros((n, self.size, self.size))
        for j, entries in self.coefficients.items():
            for (a, b), coef in entries.items():
                out[j, a, b] = float(coef)
        return out


class MomentTemplate:
    """
    The linearized blocks of level mu for N parties.

    `y_index` lists the monomials carried as variables, constant first.
    `scaling` holds the per-monomial factor of the conditioned variables,
    y_hat_j = scaling_j * y_j, and every block keeps the diagonal
    `congruence` D_b with Gamma_hat_b = D_b Gamma_b D_b. Both are all ones
    until condition_template is applied.
    """

    def __init__(
        self,
        mu: int,
        N: int,
        basis: List[Monomial],
        y_index: List[Monomial],
        blocks: List[MomentBlock],
        shared: bool = False,
        scaling: Optional[np.ndarray] = None,
        conditioned: bool = False,
    ):
        self.mu = mu
        self.N = N
        self.basis = basis
        self.y_index = y_index
        self.blocks = blocks
        self.shared = shared
        self.scaling = np.ones(len(y_index)) if scaling is None else scaling
        self.conditioned = conditioned
        self._positions = {mono: j for j, mono in enumerate(y_index)}

    @property
    def num_moments(self) -> int:
        return len(self.y_index)

    @property
    def block_sizes(self) -> List[int]:
        return [block.size for block in self.blocks]

    def index_of(self, mono: Monomial) -> int:
        try:
            return self._positions[mono]
        except KeyError:
            raise ValidationError(f"monomial {mono.label()} does not occur at level mu={self.mu}") from None

    def labels(self) -> List[str]:
        return [mono.label() for mono in self.y_index]

    def moment_vector(self, point: CorrelatorVector) -> List[Number]:
        """y_j = monomial_j(point), exact for exact points."""
        values = point.as_tuple()
        return [mono.evaluate(values) for mono in self.y_index]

    def evaluate_blocks(self, y: Sequence[Number]) -> List[List[List[Number]]]:
        """sum_j y_j Gamma_j in exact arithmetic (unconditioned units)."""
        if len(y) != self.num_moments:
            raise ValidationError(f"expected {self.num_moments} moments, got {len(y)}")
        result = []
        for block in self.blocks:
            k = block.size
            dense: List[List[Number]] = [[0] * k for _ in range(k)]
            for j, entries in block.coefficients.items():
                for (a, b), coef in entries.items():
                    dense[a][b] += coef * y[j]
            result.append(dense)
        return result

    def entry_values(self, point: CorrelatorVector) -> List[List[List[Number]]]:
        """Block entries evaluated as polynomials at a correlator point."""
        values = point.as_tuple()
        return [[[entry.evaluate(values) for entry in row] for row in block.entries] for block in self.blocks]

    def functional_row(self, functional_vector: Sequence[Number]) -> np.ndarray:
        """Coefficients of a correlator functional on the conditioned moments y_hat."""
        row = np.zeros(self.num_moments)
        for name, coef in zip(CORRELATOR_NAMES, functional_vector):
            if coef:
                j = self.index_of(Monomial.variable(name))
                row[j] = float(coef) / self.scaling[j]
        return row


def _linearize(entries: List[List[Polynomial]], positions: Dict[Monomial, int]) -> Dict[int, Dict[Tuple[int, int], Fraction]]:
    coefficients: Dict[int, Dict[Tuple[int, int], Fraction]] = {}
    for a, row in enumerate(entries):
        for b, entry in enumerate(row):
            for mono, coef in entry.items():
                coefficients.setdefault(positions[mono], {})[(a, b)] = coef
    return coefficients


def build_template(mu: int, N: int, shared: bool = False) -> MomentTemplate:
    """
    Build the exact moment and localizing blocks of level mu.

    With `shared` the four localizing blocks and the moment block are summed
    into a single block whose multiplier is 1 + g_1 + ... + g_4.
    """
    if mu not in SUPPORTED_LEVELS:
        raise UnsupportedScenarioError(f"hierarchy level mu={mu} is not supported; use one of {list(SUPPORTED_LEVELS)}")
    Scenario(N=N).check_supported()
    ideal = correlator_ideal(N)
    basis = quotient_basis(mu)
    k = len(basis)

    products = [[None] * k for _ in range(k)]
    for a in range(k):
        for b in range(a, k):
            products[a][b] = products[b][a] = ideal.reduce(Polynomial.from_monomial(basis[a].times(basis[b])))

    multipliers: List[Tuple[str, Polynomial]] = [("moment", Polynomial.constant(1))]
    multipliers += [(f"g{i}", g) for i, g in enumerate(constraint_polynomials(N), start=1)]

    block_entries = []
    for _, multiplier in multipliers:
        entries = [[None] * k for _ in range(k)]
        for a in range(k):
            for b in range(a, k):
                entries[a][b] = entries[b][a] = ideal.reduce(multiplier * products[a][b])
        block_entries.append(entries)

    if shared:
        total = Polynomial()
        for _, multiplier in multipliers:
            total = total + multiplier
        summed = [[Polynomial() for _ in range(k)] for _ in range(k)]
        for entries in block_entries:
            for a in range(k):
                for b in range(k):
                    summed[a][b] = summed[a][b] + entries[a][b]
        multipliers = [("shared", ideal.reduce(total))]
        block_entries = [summed]

    monomials = {Monomial.one()}
    for entries in block_entries:
        for row in entries:
            for entry in row:
                monomials.update(entry.monomials())
    y_index = sorted(monomials, key=Monomial.sort_key)
    positions = {mono: j for j, mono in enumerate(y_index)}

    blocks = []
    for (name, multiplier), entries in zip(multipliers, block_entries):
        block = MomentBlock(name, multiplier, entries, _linearize(entries, positions), np.zeros(0))
        block.matrices = block.exact_matrices_float(len(y_index))
        blocks.append(block)

    logger.debug(
        "built level %d template for N=%d: %d moments, blocks %s",
        mu, N, len(y_index), [b.size for b in blocks],
    )
    return MomentTemplate(mu, N, basis, y_index, blocks, shared=shared)


def _block_weight(name: str, N: int) -> float:
    if name == "moment":
        return 1.0
    if name == "shared":
        return 1.0 / (N + 1)
    return 1.0 / N


def condition_template(template: MomentTemplate, N: int) -> MomentTemplate:
    """
    Rescale a template so entries are O(1) over the whole relaxed surface.

    A monomial of degree k is carried as y_hat = N^-k y; row and column a of
    every block are scaled by N^-deg(b_a), and localizing blocks additionally
    by the reciprocal of their multiplier's size. Semidefiniteness is
    unchanged; duals map back with Z_orig = D Z D.
    """
    if template.conditioned:
        return template
    if N != template.N:
        raise ValidationError(f"template was built for N={template.N}, not N={N}")
    moment_degrees = np.array([mono.degree for mono in template.y_index])
    basis_degrees = np.array([mono.degree for mono in template.basis])
    scaling = float(N) ** (-moment_degrees.astype(float))

    blocks = []
    for block in template.blocks:
        weight = _block_weight(block.name, N)
        congruence = float(N) ** (-basis_degrees.astype(float)) * np.sqrt(weight)
        exponents = moment_degrees[:, None, None] - basis_degrees[None, :, None] - basis_degrees[None, None, :]
        factors = float(N) ** exponents.astype(float) * weight
        raw = block.exact_matrices_float(template.num_moments)
        blocks.append(
            MomentBlock(block.name, block.multiplier, block.entries, block.coefficients, raw * factors, congruence)
        )
    return MomentTemplate(
        template.mu, N, template.basis, template.y_index, blocks,
        shared=template.shared, scaling=scaling, conditioned=True,
    )


def _functional_vector(constraint: PointConstraint) -> Tuple[Number, ...]:
    if constraint.functional.is_zero():
        raise ValidationError("constraint functional is identically zero")
    return constraint.functional.vector()


def _eliminate(rows: np.ndarray, rhs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Particular solution and orthonormal nullspace basis of rows @ v = rhs."""
    n = rows.shape[1]
    if rows.shape[0] == 0:
        return np.zeros(n), np.eye(n)
    particular, _, _, _ = linalg.lstsq(rows, rhs)
    residual = np.linalg.norm(rows @ particular - rhs)
    if residual > CONSISTENCY_TOLERANCE * max(1.0, np.linalg.norm(rhs)):
        raise InconsistentConstraintsError(
            f"constraints cannot hold simultaneously (least-squares residual {residual:.3e})"
        )
    return particular, linalg.null_space(rows)


def _assemble(
    template: MomentTemplate,
    rows: np.ndarray,
    rhs: np.ndarray,
    labels: List[str],
    kind: str,
    constraints: List[PointConstraint],
) -> SdpProblem:
    particular, basis = _eliminate(rows, rhs)
    n_moment_vars = template.num_moments - 1
    constant, matrices = [], []
    for block in template.blocks:
        free = block.matrices[1:]
        if len(labels) > n_moment_vars:
            free = np.concatenate([free, np.zeros((1,) + free.shape[1:])], axis=0)
        constant.append(block.matrices[0] + np.tensordot(particular, free, axes=1))
        matrices.append(np.tensordot(basis.T, free, axes=1))

    if kind == "lambda":
        objective = basis[-1].copy()
        offset = float(particular[-1])
    else:
        objective = np.zeros(basis.shape[1])
        offset = 0.0
    return SdpProblem(
        block_sizes=template.block_sizes,
        constant=constant,
        matrices=matrices,
        objective=objective,
        objective_offset=offset,
        kind=kind,
        elimination=Elimination(labels=labels, particular=particular, basis=basis),
        template=template,
        constraints=list(constraints),
    )


def _normalized(rows: List[np.ndarray], rhs: List[float]) -> Tuple[np.ndarray, np.ndarray]:
    if not rows:
        return np.zeros((0, 0)), np.zeros(0)
    matrix = np.vstack(rows)
    values = np.array(rhs, dtype=float)
    scale = np.abs(matrix).max(axis=1)
    return matrix / scale[:, None], values / scale


def assemble_feasibility(template: MomentTemplate, constraints: Sequence[PointConstraint]) -> SdpProblem:
    """
    Feasibility problem: find y with y_0 = 1, every functional fixed to its
    value and all blocks PSD. Equalities are eliminated, so the remaining
    variables are free.
    """
    constraints = list(constraints)
    rows, rhs = [], []
    for constraint in constraints:
        rows.append(template.functional_row(_functional_vector(constraint))[1:])
        rhs.append(float(constraint.value))
    matrix, values = _normalized(rows, rhs)
    if matrix.size == 0:
        matrix = np.zeros((0, template.num_moments - 1))
    labels = template.labels()[1:]
    return _assemble(template, matrix, values, labels, "feasibility", constraints)


def assemble_lambda_max(template: MomentTemplate, direction: Sequence[PointConstraint]) -> SdpProblem:
    """
    Maximize lambda subject to phi_k(y) = lambda * v_k for every direction
    constraint (functional phi_k, value v_k) and all blocks PSD.
    """
    direction = list(direction)
    if not direction:
        raise ValidationError("a lambda problem needs at least one direction constraint")
    if all(float(c.value) == 0.0 for c in direction):
        raise ValidationError("zero direction: every direction value is 0")
    fixed = [template.functional_row(_functional_vector(c))[1:] for c in direction]
    # the values themselves must be consistent, not only their multiples
    _eliminate(*_normalized(fixed, [float(c.value) for c in direction]))
    rows = [np.append(row, -float(c.value)) for row, c in zip(fixed, direction)]
    matrix, values = _normalized(rows, [0.0] * len(rows))
    labels = template.labels()[1:] + ["lambda"]
    return _assemble(template, matrix, values, labels, "lambda", direction)


def recover_moments(problem: SdpProblem, w: np.ndarray) -> Tuple[np.ndarray, Optional[float]]:
    """
    Full moment vector in original units (y_0 = 1 first) and, for lambda
    problems, lambda, from the free variables w.
    """
    elimination = problem.elimination
    full = elimination.particular + elimination.basis @ w
    template = problem.template
    lam = None
    if problem.kind == "lambda":
        lam = float(full[-1])
        full = full[:-1]
    y_hat = np.concatenate([[1.0], full])
    return y_hat / template.scaling, lam
