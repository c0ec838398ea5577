"""
Block-diagonal SDP solver and certificate handling.

Problems are in linear-matrix-inequality form

    maximize c.w   subject to   F(w) = F0 + sum_k w_k F_k  >= 0

and are solved by a primal-dual interior-point method on the homogeneous
self-dual embedding with Nesterov-Todd scaling. Writing the slack as S and
the dual matrix as Z, the embedding iterates on (w, S, Z, tau, kappa) with

    <F_k, Z> + c_k tau = 0,   S - sum_k w_k F_k - tau F0 = 0,
    kappa - c.w + <F0, Z> = 0,

so the limit either recovers an optimal pair (tau > 0), an improving dual
ray proving infeasibility (<F0, Z> < 0) or an improving primal ray.
"""
import logging
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from app.config import settings
from app.core.exceptions import NumericalFailureError, ValidationError
from app.schemas.correlators import CORRELATOR_NAMES, BellInequality, PointConstraint
from app.schemas.sdp import SdpOutcome, SdpProblem, SolverStats
from app.services.moment_builder import MomentTemplate, assemble_feasibility, recover_moments
from app.services.quotient_ring import Monomial, Polynomial


logger = logging.getLogger(__name__)

STEP_FRACTION = 0.99
RANK_TOLERANCE = 1e-10
REGULARIZATION = 1e-10
REFINEMENT_STEPS = 2
STALL_STEP = 1e-10
STALL_LIMIT = 5


Blocks = List[np.ndarray]


def _inner(a: Blocks, b: Blocks) -> float:
    return float(sum(np.vdot(x, y) for x, y in zip(a, b)))


def _norm(blocks: Blocks) -> float:
    return float(np.sqrt(sum(np.vdot(x, x) for x in blocks)))


def _sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def _adjoint(matrices: Blocks, blocks: Blocks, n: int) -> np.ndarray:
    """(<F_k, X>)_k."""
    out = np.zeros(n)
    for m, x in zip(matrices, blocks):
        out += m.reshape(n, x.size) @ x.ravel()
    return out


def _forward(matrices: Blocks, w: np.ndarray) -> Blocks:
    """sum_k w_k F_k per block."""
    return [np.tensordot(w, m, axes=1) for m in matrices]


def _split(vector: np.ndarray, sizes: Sequence[int]) -> Blocks:
    out, start = [], 0
    for k in sizes:
        out.append(_sym(vector[start:start + k * k].reshape(k, k)))
        start += k * k
    return out


class _Scaling:
    """
    Nesterov-Todd scaling of one block: G^T Z G = G^-1 S G^-T = diag(lam),
    so W = G G^T satisfies W Z W = S.
    """

    def __init__(self, s: np.ndarray, z: np.ndarray):
        ls = np.linalg.cholesky(s)
        lz = np.linalg.cholesky(z)
        _, lam, vt = np.linalg.svd(lz.T @ ls)
        if lam[-1] <= 0:
            raise np.linalg.LinAlgError("scaling point is singular")
        root = np.sqrt(lam)
        self.lam = lam
        self.g_inv = (root[:, None] * vt) @ linalg.solve_triangular(ls, np.eye(s.shape[0]), lower=True)
        if not np.all(np.isfinite(self.g_inv)):
            raise np.linalg.LinAlgError("scaling point is singular")

    def scale(self, x: np.ndarray) -> np.ndarray:
        """G^-1 X G^-T, for X of shape (k, k) or (n, k, k)."""
        return self.g_inv @ x @ self.g_inv.T

    def unscale_dual(self, x: np.ndarray) -> np.ndarray:
        """G^-T X G^-1."""
        return _sym(self.g_inv.T @ x @ self.g_inv)

    def centering(self, target: np.ndarray) -> np.ndarray:
        """D with (diag(lam) D + D diag(lam)) / 2 = target."""
        return 2.0 * target / (self.lam[:, None] + self.lam[None, :])

    def max_step(self, dx: np.ndarray) -> float:
        """Largest a with diag(lam) + a dx PSD."""
        root = 1.0 / np.sqrt(self.lam)
        lowest = np.linalg.eigvalsh(_sym(root[:, None] * dx * root[None, :]))[0]
        return np.inf if lowest >= 0 else -1.0 / lowest


def _triangular_solve(r: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """x with R^T R x = rhs."""
    return linalg.solve_triangular(r, linalg.solve_triangular(r, rhs, trans="T"))


def _schur_solver(rows: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """
    Solver for H x = b with H = rows @ rows.T, factored through a QR of
    rows.T. Near-singular factors get a Tikhonov shift; refinement steps
    are taken against the unshifted H.
    """
    n = rows.shape[0]
    if n == 0:
        return lambda rhs: np.zeros(0)
    r = np.linalg.qr(rows.T, mode="r")
    diag = np.abs(np.diag(r))
    if diag.min() <= REGULARIZATION * diag.max():
        shift = REGULARIZATION * diag.max()
        r = np.linalg.qr(np.vstack([rows.T, shift * np.eye(n)]), mode="r")

    def apply(rhs: np.ndarray) -> np.ndarray:
        x = _triangular_solve(r, rhs)
        for _ in range(REFINEMENT_STEPS):
            x = x + _triangular_solve(r, rhs - rows @ (rows.T @ x))
        if not np.all(np.isfinite(x)):
            raise np.linalg.LinAlgError("singular Schur complement")
        return x

    return apply


class _Presolved:
    """Reparameterization w = basis @ u onto directions that move F."""

    def __init__(self, matrices: Blocks, objective: np.ndarray):
        n = objective.shape[0]
        self.n_original = n
        if n == 0:
            self.basis = np.zeros((0, 0))
            self.matrices = matrices
            self.objective = objective
            self.unbounded = False
            return
        stacked = np.hstack([m.reshape(n, -1) for m in matrices])
        u, s, _ = np.linalg.svd(stacked, full_matrices=False)
        keep = s > RANK_TOLERANCE * max(1.0, s[0] if s.size else 0.0)
        self.basis = u[:, keep]
        self.matrices = [np.tensordot(self.basis.T, m, axes=1) for m in matrices]
        self.objective = self.basis.T @ objective
        leftover = objective - self.basis @ self.objective
        self.unbounded = bool(np.linalg.norm(leftover) > 1e-9 * max(1.0, np.linalg.norm(objective)))


class _HsdResult:
    def __init__(self, status: str, w, s, z, tau, kappa, stats: SolverStats, dual_value: Optional[float] = None):
        self.status = status
        self.w = w
        self.s = s
        self.z = z
        self.tau = tau
        self.kappa = kappa
        self.stats = stats
        self.dual_value = dual_value


def _hsd(
    constant: Blocks,
    matrices: Blocks,
    c: np.ndarray,
    max_iterations: int,
    feasibility_tolerance: float,
    gap_tolerance: float,
    reduced_tolerance: float,
) -> _HsdResult:
    n = c.shape[0]
    sizes = [f.shape[0] for f in constant]
    nu = sum(sizes)
    w = np.zeros(n)
    s = [np.eye(k) for k in sizes]
    z = [np.eye(k) for k in sizes]
    tau, kappa = 1.0, 1.0
    f0_norm = max(1.0, _norm(constant))
    c_norm = max(1.0, float(np.linalg.norm(c)))
    stalls = 0
    stats = SolverStats()
    best: Optional[Tuple[float, _HsdResult]] = None
    best_ray: Optional[Tuple[float, _HsdResult]] = None

    for iteration in range(max_iterations + 1):
        fw = _forward(matrices, w)
        rp = [sb - fb - tau * f0 for sb, fb, f0 in zip(s, fw, constant)]
        fz = _adjoint(matrices, z, n)
        rd = fz + c * tau
        cw = float(c @ w)
        f0z = _inner(constant, z)
        rg = kappa - cw + f0z
        gap = _inner(s, z)
        mu = (gap + tau * kappa) / (nu + 1)

        pres = _norm(rp) / tau / f0_norm
        dres = float(np.linalg.norm(rd)) / tau / c_norm
        pcost, dcost = cw / tau, f0z / tau
        rel_gap = max(gap / tau ** 2, abs(dcost - pcost)) / (1.0 + abs(pcost))
        stats = SolverStats(
            iterations=iteration,
            primal_residual=pres,
            dual_residual=dres,
            gap=gap / tau ** 2,
            tau=tau,
            kappa=kappa,
        )
        logger.debug(
            "hsd it=%d pcost=%.9e dcost=%.9e gap=%.3e pres=%.3e dres=%.3e tau=%.3e kappa=%.3e",
            iteration, pcost, dcost, gap / tau ** 2, pres, dres, tau, kappa,
        )

        candidate = _HsdResult("optimal", w / tau, [x / tau for x in s], [x / tau for x in z], tau, kappa, stats, dcost)
        if pres <= feasibility_tolerance and dres <= feasibility_tolerance and rel_gap <= gap_tolerance:
            return candidate
        score = max(pres, dres, rel_gap)
        if best is None or score < best[0]:
            best = (score, candidate)

        if f0z < 0:
            ray = float(np.linalg.norm(fz)) / -f0z
            certificate = _HsdResult("infeasible", None, None, [x / -f0z for x in z], tau, kappa, stats)
            if ray <= feasibility_tolerance:
                return certificate
            if best_ray is None or ray < best_ray[0]:
                best_ray = (ray, certificate)
        if cw > 0:
            ray = _norm([sb - fb for sb, fb in zip(s, fw)]) / cw
            if ray <= feasibility_tolerance:
                return _HsdResult("unbounded", w / cw, None, None, tau, kappa, stats)
        if iteration == max_iterations:
            break

        try:
            scalings = [_Scaling(sb, zb) for sb, zb in zip(s, z)]
            scaled = [sc.scale(m) for sc, m in zip(scalings, matrices)]
            rows = np.hstack([m.reshape(n, m.shape[1] * m.shape[2]) for m in scaled])
            f0_vec = np.concatenate([sc.scale(f0).ravel() for sc, f0 in zip(scalings, constant)])
            rp_vec = np.concatenate([sc.scale(r).ravel() for sc, r in zip(scalings, rp)])
            hsolve = _schur_solver(rows)
            q = rows @ f0_vec
            f = float(f0_vec @ f0_vec)
            p = c + q
            v = hsolve(q - c)
            denominator = kappa / tau + f - float(p @ v)
        except np.linalg.LinAlgError:
            logger.debug("hsd scaling failed at iteration %d", iteration)
            break

        def direction(sigma: float, eta: float, corrections: Optional[Blocks], tk_correction: float):
            targets = []
            for k, sc in enumerate(scalings):
                target = np.diag(sigma * mu - sc.lam ** 2)
                if corrections is not None:
                    target = target - corrections[k]
                targets.append(sc.centering(target))
            t = np.concatenate([d.ravel() for d in targets]) + eta * rp_vec
            r_tk = sigma * mu - tau * kappa - tk_correction
            b1 = rows @ t + eta * rd
            b2 = eta * rg + r_tk / tau + float(f0_vec @ t)
            u = hsolve(b1)
            dtau = (b2 - float(p @ u)) / denominator
            dw = u - v * dtau
            moved = rows.T @ dw + dtau * f0_vec
            dz_scaled = _split(t - moved, sizes)
            ds_scaled = _split(moved - eta * rp_vec, sizes)
            dkappa = (r_tk - kappa * dtau) / tau
            if not (np.all(np.isfinite(dw)) and np.isfinite(dtau) and np.isfinite(dkappa)):
                raise np.linalg.LinAlgError("non-finite Newton direction")
            return dw, ds_scaled, dz_scaled, dtau, dkappa

        def step_length(ds_scaled, dz_scaled, dtau, dkappa) -> float:
            alpha = np.inf
            for sc, dsb, dzb in zip(scalings, ds_scaled, dz_scaled):
                alpha = min(alpha, sc.max_step(dsb), sc.max_step(dzb))
            if dtau < 0:
                alpha = min(alpha, -tau / dtau)
            if dkappa < 0:
                alpha = min(alpha, -kappa / dkappa)
            return alpha

        try:
            _, ds_a, dz_a, dtau_a, dkappa_a = direction(0.0, 1.0, None, 0.0)
            alpha_affine = min(1.0, step_length(ds_a, dz_a, dtau_a, dkappa_a))
            sigma = (1.0 - alpha_affine) ** 3
            corrections = [_sym(a @ b) for a, b in zip(ds_a, dz_a)]
            dw, ds_scaled, dz_scaled, dtau, dkappa = direction(sigma, 1.0 - sigma, corrections, dtau_a * dkappa_a)
            alpha = min(1.0, STEP_FRACTION * step_length(ds_scaled, dz_scaled, dtau, dkappa))
        except np.linalg.LinAlgError:
            logger.debug("hsd direction failed at iteration %d", iteration)
            break

        # the primal step is taken from the linear equation it must satisfy
        eta = 1.0 - sigma
        ds = [fb + dtau * f0 - eta * r for fb, f0, r in zip(_forward(matrices, dw), constant, rp)]
        dz = [sc.unscale_dual(d) for sc, d in zip(scalings, dz_scaled)]
        w = w + alpha * dw
        s = [_sym(x + alpha * d) for x, d in zip(s, ds)]
        z = [_sym(x + alpha * d) for x, d in zip(z, dz)]
        tau += alpha * dtau
        kappa += alpha * dkappa
        stalls = stalls + 1 if alpha < STALL_STEP else 0
        if stalls >= STALL_LIMIT:
            logger.debug("hsd stalled at iteration %d", iteration)
            break

    if best is not None and best[0] <= reduced_tolerance:
        logger.warning("sdp stopped short of full accuracy; accepting the best iterate at %.2e", best[0])
        return best[1]
    if best_ray is not None and best_ray[0] <= reduced_tolerance:
        logger.warning("sdp stopped short of full accuracy; accepting the infeasibility ray at %.2e", best_ray[0])
        return best_ray[1]
    return _HsdResult("numerical_failure", None, None, None, tau, kappa, stats)


def _margin_form(problem: SdpProblem) -> Tuple[Blocks, Blocks, np.ndarray]:
    """Append t with F(w) - t I >= 0 and t <= 1; the objective becomes t."""
    n = problem.num_variables
    constant = list(problem.constant) + [np.ones((1, 1))]
    matrices = []
    for m, k in zip(problem.matrices, problem.block_sizes):
        matrices.append(np.concatenate([m, -np.eye(k)[None]], axis=0))
    extra = np.zeros((n + 1, 1, 1))
    extra[n, 0, 0] = -1.0
    matrices.append(extra)
    objective = np.zeros(n + 1)
    objective[n] = 1.0
    return constant, matrices, objective


def _min_eigenvalue(blocks: Blocks) -> float:
    return float(min(np.linalg.eigvalsh(_sym(b))[0] for b in blocks))


def solve(
    problem: SdpProblem,
    max_iterations: Optional[int] = None,
    feasibility_tolerance: Optional[float] = None,
    gap_tolerance: Optional[float] = None,
    margin: Optional[float] = None,
) -> SdpOutcome:
    """
    Solve an SDP problem.

    Feasibility problems are solved in maximal-margin form: maximize t with
    F(w) - t I >= 0 and t <= 1. The problem is infeasible when the dual
    bound on t* lies below -margin; the dual blocks are then returned as
    the infeasibility certificate with `margin` set to that bound's size.
    """
    max_iterations = settings.SDP_MAX_ITERATIONS if max_iterations is None else max_iterations
    feasibility_tolerance = settings.SDP_FEASIBILITY_TOLERANCE if feasibility_tolerance is None else feasibility_tolerance
    gap_tolerance = settings.SDP_GAP_TOLERANCE if gap_tolerance is None else gap_tolerance
    reduced_tolerance = max(settings.SDP_REDUCED_TOLERANCE, feasibility_tolerance, gap_tolerance)
    margin = settings.CERTIFICATE_MARGIN if margin is None else margin
    feasibility = problem.kind == "feasibility"

    if feasibility:
        constant, matrices, objective = _margin_form(problem)
    else:
        constant, matrices, objective = list(problem.constant), list(problem.matrices), problem.objective

    presolved = _Presolved(matrices, objective)
    if presolved.unbounded:
        logger.info("sdp objective moves along a direction that leaves every block unchanged: unbounded")
        return SdpOutcome(status="unbounded", problem=problem)

    result = _hsd(
        constant, presolved.matrices, presolved.objective,
        max_iterations, feasibility_tolerance, gap_tolerance, reduced_tolerance,
    )
    n_blocks = len(problem.block_sizes)
    stats = result.stats

    if result.status == "optimal":
        w_full = presolved.basis @ result.w if presolved.n_original else np.zeros(0)
        value = float(objective @ w_full)
        primal = [c + np.tensordot(w_full, m, axes=1) for c, m in zip(constant, matrices)]
        stats = stats.model_copy(update={"min_eigenvalue": _min_eigenvalue(primal[:n_blocks])})
        dual = [_sym(z) for z in result.z[:n_blocks]]
        if feasibility:
            w = w_full[:-1]
            upper = max(value, result.dual_value) if result.dual_value is not None else value
            if upper < -margin:
                total = sum(np.trace(z) for z in dual)
                certificate = [z / total for z in dual] if total > 0 else dual
                logger.info("sdp feasibility: infeasible with margin %.3e after %d iterations", -upper, stats.iterations)
                return SdpOutcome(status="infeasible", value=value, dual=certificate, margin=-upper, stats=stats, problem=problem)
            y = recover_moments(problem, w)[0] if problem.elimination is not None else None
            logger.info("sdp feasibility: feasible with margin %.3e after %d iterations", value, stats.iterations)
            return SdpOutcome(status="optimal", value=value, w=w, y=y, dual=dual, margin=value, stats=stats, problem=problem)
        value += problem.objective_offset
        y = recover_moments(problem, w_full)[0] if problem.elimination is not None else None
        logger.info("sdp %s: optimal value %.12g after %d iterations", problem.kind, value, stats.iterations)
        return SdpOutcome(status="optimal", value=value, w=w_full, y=y, dual=dual, stats=stats, problem=problem)

    if result.status == "infeasible":
        dual = [_sym(z) for z in result.z[:n_blocks]]
        logger.info("sdp %s: infeasible after %d iterations", problem.kind, stats.iterations)
        return SdpOutcome(status="infeasible", dual=dual, stats=stats, problem=problem)

    if result.status == "unbounded":
        logger.info("sdp %s: unbounded after %d iterations", problem.kind, stats.iterations)
        return SdpOutcome(status="unbounded", stats=stats, problem=problem)

    logger.info("sdp %s: numerical failure after %d iterations", problem.kind, stats.iterations)
    return SdpOutcome(status="numerical_failure", stats=stats, problem=problem)


def original_duals(outcome: SdpOutcome, template: MomentTemplate) -> Blocks:
    """Dual blocks in unconditioned units: Z_orig = D Z D."""
    if outcome.dual is None:
        raise NumericalFailureError("outcome carries no dual matrices", phrase="missing_duals")
    return [block.congruence[:, None] * z * block.congruence[None, :] for block, z in zip(template.blocks, outcome.dual)]


def _moment_functional(template: MomentTemplate, duals: Blocks) -> np.ndarray:
    """r_j = sum_b <Z_b, Gamma_j^b>: the linear functional on moments induced by the duals."""
    n = template.num_moments
    r = np.zeros(n)
    for block, z in zip(template.blocks, duals):
        r += block.exact_matrices_float(n).reshape(n, -1) @ z.ravel()
    return r


def extract_bell_inequality(outcome: SdpOutcome, constraints: Optional[Sequence[PointConstraint]] = None) -> BellInequality:
    """
    Read the Bell inequality off the dual blocks.

    The duals define a functional on moments whose degree-one part lies in
    the span of the constraint functionals; alpha is that combination and
    betaC the weight on the constant moment. For lambda problems the result
    is normalized to evaluate to -1 per unit of lambda along the direction,
    and exactly 0 at lambda* times the direction values. For infeasible
    feasibility problems it evaluates to -1 at the queried values.
    """
    problem = outcome.problem
    if problem is None or problem.template is None or outcome.dual is None:
        raise NumericalFailureError("no dual multipliers available for extraction", phrase="missing_duals")
    constraints = list(problem.constraints if constraints is None else constraints)
    if not constraints:
        raise ValidationError("extraction needs the fixing constraints")
    template: MomentTemplate = problem.template

    r = _moment_functional(template, original_duals(outcome, template))
    degree_one = [template.index_of(Monomial.variable(name)) for name in CORRELATOR_NAMES]
    target = r[degree_one]
    functionals = np.array([[float(v) for v in c.functional.vector()] for c in constraints])
    values = np.array([float(c.value) for c in constraints])
    multipliers, _, _, _ = linalg.lstsq(functionals.T, target)
    alpha = functionals.T @ multipliers
    beta = float(r[0])

    if problem.kind == "lambda":
        slope = float(multipliers @ values)
        if not slope < 0:
            raise NumericalFailureError("dual functional does not decrease along the direction", phrase="missing_duals")
        scale = -1.0 / slope
        alpha = alpha * scale
        beta = beta * scale
        note = "normalized to -1 per unit lambda along the direction; zero at lambda_max"
    else:
        level = float(multipliers @ values) + beta
        if not level < 0:
            raise NumericalFailureError("certificate does not separate the queried values", phrase="missing_duals")
        scale = -1.0 / level
        alpha = alpha * scale
        beta = beta * scale
        note = "normalized to -1 at the queried values"

    return BellInequality(
        alpha={name: float(a) for name, a in zip(CORRELATOR_NAMES, alpha)},
        betaC=float(beta),
        note=note,
        dual_scale=scale,
    )


class CertificateReport:
    """Outcome of recomposing sum_i g_i sigma_i against the extracted inequality."""

    def __init__(self, passed: bool, residual: float, min_eigenvalue: float):
        self.passed = passed
        self.residual = residual
        self.min_eigenvalue = min_eigenvalue

    def to_response(self) -> dict:
        return {"passed": self.passed, "residual": self.residual, "min_eigenvalue": self.min_eigenvalue}


def validate_certificate(
    inequality: BellInequality,
    outcome: SdpOutcome,
    template: Optional[MomentTemplate] = None,
    N: Optional[int] = None,
    threshold: Optional[float] = None,
) -> CertificateReport:
    """
    Recompose l(S) = sum_i g_i sigma_i mod I from the dual blocks with
    sigma_i = b^T Z_i b, in exact arithmetic on the binary values of Z, and
    compare coefficients with alpha . S + betaC.
    """
    threshold = settings.CERTIFICATE_RESIDUAL if threshold is None else threshold
    template = template or (outcome.problem.template if outcome.problem else None)
    if template is None or outcome.dual is None:
        return CertificateReport(False, float("inf"), float("nan"))
    if N is not None and N != template.N:
        raise ValidationError(f"template was built for N={template.N}, not N={N}")

    duals = [z * inequality.dual_scale for z in original_duals(outcome, template)]
    recomposed = Polynomial()
    for block, z in zip(template.blocks, duals):
        k = block.size
        for a in range(k):
            for b in range(a, k):
                weight = Fraction(float(z[a, b])) * (1 if a == b else 2)
                if weight:
                    recomposed = recomposed + block.entries[a][b] * weight

    target = Polynomial.constant(inequality.betaC)
    for name, coef in inequality.alpha.items():
        target = target + Polynomial.variable(name) * coef

    difference = recomposed - target
    scale = max((abs(c) for _, c in target.items()), default=Fraction(1)) or Fraction(1)
    deviation = max((abs(c) for _, c in difference.items()), default=Fraction(0))
    residual = float(deviation / scale)
    lowest = _min_eigenvalue(duals) if duals else 0.0
    largest = max(float(np.abs(z).max()) for z in duals) if duals else 0.0
    psd = lowest >= -threshold * max(1.0, largest)
    return CertificateReport(residual <= threshold and psd, residual, lowest)


FeasibilityCheck = Callable[[np.ndarray], bool]


def relaxation_barycenter(N: int) -> np.ndarray:
    """Mean correlators of the relaxed surface under uniformly distributed strategy counts."""
    two_body = N * N / 5.0 - N
    return np.array([0.0, 0.0, two_body, 0.0, two_body])


def bisect_segment(
    template: MomentTemplate,
    constraints: Sequence[PointConstraint],
    anchor_values: Optional[Sequence[float]] = None,
    tolerance: float = 1e-7,
    max_scale: float = 64.0,
) -> float:
    """
    Largest t with the functionals fixed to anchor + t (values - anchor) still
    feasible, searched by feasibility solves. The anchor defaults to the
    barycenter of the relaxed surface, which is strictly feasible. A result
    below 1 places the queried values outside the relaxation.
    """
    constraints = list(constraints)
    values = np.array([float(c.value) for c in constraints])
    if anchor_values is None:
        center = relaxation_barycenter(template.N)
        anchor = np.array([float(np.dot(c.functional.as_array(), center)) for c in constraints])
    else:
        anchor = np.asarray(anchor_values, dtype=float)

    def feasible(t: float) -> bool:
        point = anchor + t * (values - anchor)
        fixed = [PointConstraint(functional=c.functional, value=float(v)) for c, v in zip(constraints, point)]
        outcome = solve(assemble_feasibility(template, fixed))
        if outcome.status == "numerical_failure":
            raise NumericalFailureError(f"feasibility solve failed at t={t:.6g} during bisection")
        return outcome.optimal

    if not feasible(0.0):
        raise NumericalFailureError("bisection anchor is not feasible")
    lo, hi = 0.0, 1.0
    while feasible(hi):
        lo = hi
        if hi >= max_scale:
            return hi
        hi *= 2.0
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    logger.debug("bisection located the boundary at t=%.9f", lo)
    return lo
