import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import lstsq, null_space, pinv
from scipy.optimize import nnls

from .basis import evaluate_vandermonde, orthonormalize
from .errors import BasisError, ConstructionError, InfeasibleConstructionError
from .lbfgs import CONVERGED, INFEASIBLE, STALLED, OptimizerOptions, minimize_lbfgs
from .objective import boundary_matrix, build_context, linear_jacobian, value_and_gradient
from .operator_verifier import OperatorVerifier
from .parametrize import (
    ParametrizationMode,
    ParamVector,
    norm_from_params,
    params_from_norm,
    skew_from_params,
    skew_length,
)


@dataclass(frozen=True, eq=False)
class FsbpOperator:
    """D = P^{-1} Q on a grid. Property checks live in OperatorVerifier."""

    grid: object
    p: np.ndarray
    Q: np.ndarray
    space_name: str
    constants_exact: bool = True

    def __post_init__(self):
        p = np.array(self.p, dtype=float).reshape(-1)
        Q = np.array(self.Q, dtype=float)
        if p.size != self.grid.n or Q.shape != (self.grid.n, self.grid.n):
            raise ConstructionError(
                f"operator shapes p={p.shape}, Q={Q.shape} do not match grid with {self.grid.n} nodes"
            )
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "Q", Q)

    @property
    def n(self):
        return self.grid.n

    @property
    def P(self):
        return np.diag(self.p)

    @property
    def B(self):
        return boundary_matrix(self.n)

    @property
    def D(self):
        return self.Q / self.p[:, None]


@dataclass
class TwoStepReport:
    moment_residual: float
    final_objective: float
    min_weight: float
    used_nnls: bool
    verified: bool = False

    def as_dict(self):
        return asdict(self)


class OperatorOptimizer:
    """Builds FSBP operators by minimizing ||XW + BV/2||^2 over the admissible set."""

    def __init__(self, options=None):
        self.options = options or OptimizerOptions()
        self.verifier = OperatorVerifier()
        self.logger = logging.getLogger(__name__)

    def lbfgs_minimize(self, ctx, start, options=None):
        """Run LBFGS on the objective context from ``start``; returns (ParamVector, report)."""
        options = options or self.options
        z, report = minimize_lbfgs(lambda z: value_and_gradient(ctx, z), start.flatten(), options)
        return ParamVector.from_flat(z, ctx.n_sigma), report

    def starting_points(self, n, bandwidth=None, options=None):
        """Start 0 is sigma = 0, rho = 0; later starts draw from independent seeded streams."""
        options = options or self.options
        n_sigma = skew_length(n, bandwidth)
        yield ParamVector.zeros(n, bandwidth)
        streams = np.random.SeedSequence(options.rng_seed).spawn(options.max_restarts)
        for stream in streams:
            rng = np.random.default_rng(stream)
            yield ParamVector(
                sigma=options.init_scale * rng.standard_normal(n_sigma),
                rho=options.init_scale * rng.standard_normal(n),
            )

    def assemble_operator(self, grid, params, mode, bandwidth, space_name):
        """Q = S + B/2 with S from sigma, p from rho."""
        mode = ParametrizationMode.parse(mode)
        S = skew_from_params(params.sigma, grid.n, bandwidth)
        P = norm_from_params(params.rho, grid.interval, mode)
        Q = S.matrix + 0.5 * boundary_matrix(grid.n)
        return FsbpOperator(grid=grid, p=P.p, Q=Q, space_name=space_name,
                            constants_exact=P.constants_exact)

    def least_squares_polish(self, ctx, params, report, options=None, solver=None):
        """Minimum-norm Gauss-Newton steps on the residual, which is affine in (sigma, p).

        Starts from an LBFGS result. Steps that would leave the range of the
        weight map are shortened; a step that does not lower F ends the polish.
        ``solver`` is the pseudo-inverse from ``polish_solver`` when the caller
        polishes several starts on one context.
        """
        options = options or self.options
        if options.polish_steps == 0:
            return params, report
        if solver is None:
            solver = self.polish_solver(ctx)
        pseudo_inverse, weights_basis = solver

        def affine_residual(sigma, p):
            S = skew_from_params(sigma, ctx.n, ctx.bandwidth)
            return S.matmul(ctx.V) - p[:, None] * ctx.Vx + ctx.half_bv

        sigma = params.sigma.copy()
        p = norm_from_params(params.rho, ctx.interval, ctx.mode).p
        R = affine_residual(sigma, p)
        f = float(np.sum(R * R))
        steps = 0
        for _ in range(options.polish_steps):
            delta = -(pseudo_inverse @ R.ravel())
            d_sigma = delta[:ctx.n_sigma]
            d_p = delta[ctx.n_sigma:]
            if weights_basis is not None:
                d_p = weights_basis @ d_p
            t = feasible_fraction(p, d_p, ctx.mode)
            trial_sigma, trial_p = sigma + t * d_sigma, p + t * d_p
            trial = affine_residual(trial_sigma, trial_p)
            f_trial = float(np.sum(trial * trial))
            if not f_trial < f:
                break
            sigma, p, R, f = trial_sigma, trial_p, trial, f_trial
            steps += 1

        rho = params_from_norm(p, ctx.mode) if steps else None
        if rho is None:
            return params, report
        polished = ParamVector(sigma=sigma, rho=rho)
        value, gradient = value_and_gradient(ctx, polished.flatten())
        if not value < report.final_objective:
            return params, report

        self.logger.debug(f"Polish: F {report.final_objective:.3e} -> {value:.3e} in {steps} steps")
        report.final_objective = value
        report.final_grad_norm = float(np.linalg.norm(gradient))
        report.objective_history.append(value)
        report.polish_steps = steps
        report.status = CONVERGED if value <= options.objective_tol else STALLED
        return polished, report

    @staticmethod
    def polish_solver(ctx):
        """Pseudo-inverse of the linear Jacobian; constants-exact modes move p inside sum(p) = const."""
        J = linear_jacobian(ctx)
        weights_basis = None
        if ctx.mode.constants_exact:
            weights_basis = null_space(np.ones((1, ctx.n)))
            J = np.hstack([J[:, :ctx.n_sigma], J[:, ctx.n_sigma:] @ weights_basis])
        return pinv(J), weights_basis

    def construct_operator(self, space, grid, mode=ParametrizationMode.LOGISTIC_NORMALIZED,
                           bandwidth=None, options=None):
        """Vandermonde -> orthonormalize -> multi-start LBFGS + polish -> verified operator.

        A start counts as converged only when its operator also passes
        verification at 10 sqrt(objective_tol). Raises InfeasibleConstructionError
        carrying the best least-squares minimizer when no start does.
        """
        options = options or self.options
        mode = ParametrizationMode.parse(mode)
        if space.dim < 1:
            raise BasisError(f"space '{space.name}' is empty")

        self.logger.info(
            f"Constructing operator for space '{space.name}' (K={space.dim}) on {grid.n} nodes, "
            f"mode={mode.value}, bandwidth={bandwidth}"
        )
        pair = evaluate_vandermonde(space, grid)
        orthonormal, retained = orthonormalize(pair, options.rank_tol)
        ctx = build_context(orthonormal, grid.interval, mode, bandwidth)
        solver = self.polish_solver(ctx) if options.polish_steps else None
        tolerance = 10.0 * math.sqrt(options.objective_tol)

        best = None
        for index, start in enumerate(self.starting_points(grid.n, bandwidth, options)):
            params, report = self.lbfgs_minimize(ctx, start, options)
            params, report = self.least_squares_polish(ctx, params, report, options, solver)
            report.restarts_used = index
            report.retained_rank = retained
            report.dropped_columns = space.dim - retained
            self.logger.info(
                f"Start {index}: status={report.status}, F={report.final_objective:.3e}, "
                f"iterations={report.iterations}, polish steps={report.polish_steps}"
            )
            op = self.assemble_operator(grid, params, mode, bandwidth, space.name)

            if report.status == CONVERGED:
                verification = self.verifier.check_operator(op, space, tol=tolerance)
                report.verified = verification.passed
                if verification.passed:
                    return op, report
                self.logger.warning(
                    f"Start {index} reached F={report.final_objective:.3e} but misses verification at "
                    f"tol={tolerance:.1e}: sbp={verification.sbp_defect:.2e}, "
                    f"exactness={verification.exactness_defect:.2e}"
                )
                report.status = STALLED
            else:
                self.logger.warning(f"Start {index} stalled at F={report.final_objective:.3e}")

            if best is None or report.final_objective < best[1].final_objective:
                best = (op, report, params)

        op, report, params = best
        report.status = INFEASIBLE
        report.restarts_used = options.max_restarts
        raise InfeasibleConstructionError(
            f"no FSBP operator found for space '{space.name}' on {grid.n} nodes after "
            f"{options.max_restarts + 1} starts (best F={report.final_objective:.3e})",
            report=report, operator=op, params=params,
        )

    def constants_ablation(self, space, grid, options=None):
        """Construct with and without the constants-exact normalization and integrate 1 with both.

        Where no exact operator exists the least-squares minimizer is compared.
        """
        results = {}
        for mode in (ParametrizationMode.LOGISTIC_NORMALIZED, ParametrizationMode.LOGISTIC_RAW):
            try:
                op, report = self.construct_operator(space, grid, mode, options=options)
            except InfeasibleConstructionError as e:
                op, report = e.operator, e.report
                self.logger.warning(f"Ablation {mode.value}: using the least-squares minimizer")
            error = self.verifier.quadrature_error(op, np.ones_like, grid.interval.length)
            results[mode.value] = {"operator": op, "report": report, "constant_error": error,
                                   "residual": report.final_objective}
            self.logger.info(f"Ablation {mode.value}: integral of 1 off by {error:.3e}, "
                             f"F={report.final_objective:.3e}")
        return results

    def least_squares_quadrature(self, pair, grid):
        """Weights integrating every (f g)' exactly, f, g in the space, with sum(p) = |interval|.

        Minimum-norm correction of the trapezoidal weights; nonnegative least
        squares when that correction leaves a non-positive weight.
        Returns (p, moment residual, nnls used).
        """
        first, second = np.triu_indices(pair.k)
        V, Vx = pair.V, pair.Vx
        A = np.vstack([(V[:, first] * Vx[:, second] + Vx[:, first] * V[:, second]).T, np.ones(grid.n)])
        b = np.append(V[-1, first] * V[-1, second] - V[0, first] * V[0, second], grid.interval.length)

        spacing = np.diff(grid.nodes)
        trapezoid = np.zeros(grid.n)
        trapezoid[:-1] += 0.5 * spacing
        trapezoid[1:] += 0.5 * spacing
        p = trapezoid + lstsq(A, b - A @ trapezoid)[0]
        used_nnls = not np.all(p > 0)
        if used_nnls:
            p, _ = nnls(A, b)
        return p, float(np.linalg.norm(A @ p - b)), used_nnls

    def two_step_operator(self, space, grid, tol=1e-10):
        """Classical construction: P from a least-squares quadrature, then S from SV = P V' - BV/2."""
        pair = evaluate_vandermonde(space, grid)
        orthonormal, _ = orthonormalize(pair, self.options.rank_tol)
        p, moment_residual, used_nnls = self.least_squares_quadrature(orthonormal, grid)

        ctx = build_context(orthonormal, grid.interval)
        J_sigma = linear_jacobian(ctx)[:, :ctx.n_sigma]
        sigma = lstsq(J_sigma, (p[:, None] * ctx.Vx - ctx.half_bv).ravel())[0]
        S = skew_from_params(sigma, grid.n)
        R = S.matmul(ctx.V) - p[:, None] * ctx.Vx + ctx.half_bv

        op = FsbpOperator(grid=grid, p=p, Q=S.matrix + 0.5 * boundary_matrix(grid.n),
                          space_name=space.name, constants_exact=True)
        verification = self.verifier.check_operator(op, space, tol=tol)
        report = TwoStepReport(
            moment_residual=moment_residual, final_objective=float(np.sum(R * R)),
            min_weight=float(np.min(p)), used_nnls=used_nnls, verified=verification.passed,
        )
        self.logger.info(f"Two-step construction for '{space.name}' on {grid.n} nodes: "
                         f"moment residual={moment_residual:.2e}, F={report.final_objective:.2e}, "
                         f"verified={report.verified}")
        return op, report


def feasible_fraction(p, d_p, mode, keep=0.1):
    """Largest t <= 1 keeping p + t d_p above keep * p (and raw weights below 1)."""
    t = 1.0
    shrinking = d_p < 0
    if np.any(shrinking):
        t = min(t, float(np.min((1.0 - keep) * p[shrinking] / -d_p[shrinking])))
    if ParametrizationMode.parse(mode) is ParametrizationMode.LOGISTIC_RAW:
        growing = d_p > 0
        if np.any(growing):
            t = min(t, float(np.min((1.0 - keep) * (1.0 - p[growing]) / d_p[growing])))
    return t
