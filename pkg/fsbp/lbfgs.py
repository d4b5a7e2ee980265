"""Limited-memory BFGS with a strong-Wolfe line search.

The search direction comes from the two-loop recursion over the last
``memory`` curvature pairs; step lengths come from
``scipy.optimize.line_search`` (strong Wolfe conditions).
"""
import logging
import warnings
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import List

import numpy as np
from scipy.optimize import line_search

logger = logging.getLogger(__name__)

CONVERGED = "converged"
STALLED = "stalled"
INFEASIBLE = "infeasible"

# Curvature pairs with s^T y <= CURVATURE_EPS * |s| |y| are discarded
CURVATURE_EPS = 1e-14


@dataclass(frozen=True)
class OptimizerOptions:
    memory: int = 10
    max_iters: int = 20000
    objective_tol: float = 1e-24
    grad_tol: float = 1e-15
    max_restarts: int = 8
    rng_seed: int = 0
    init_scale: float = 0.5
    c1: float = 1e-4
    c2: float = 0.9
    max_line_search: int = 60
    rank_tol: float = 1e-10
    polish_steps: int = 3

    def __post_init__(self):
        if self.memory < 1:
            raise ValueError(f"memory must be >= 1, got {self.memory}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not (self.objective_tol > 0 and self.grad_tol > 0 and self.rank_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.polish_steps < 0:
            raise ValueError(f"polish_steps must be >= 0, got {self.polish_steps}")
        if self.max_restarts < 0:
            raise ValueError(f"max_restarts must be >= 0, got {self.max_restarts}")
        if self.rng_seed < 0:
            raise ValueError(f"rng_seed must be non-negative, got {self.rng_seed}")
        if not 0 < self.c1 < self.c2 < 1:
            raise ValueError(f"line search constants need 0 < c1 < c2 < 1, got c1={self.c1}, c2={self.c2}")


@dataclass
class OptimizationReport:
    status: str
    final_objective: float
    final_grad_norm: float
    iterations: int
    restarts_used: int = 0
    objective_history: List[float] = field(default_factory=list)
    evaluations: int = 0
    retained_rank: int = 0
    dropped_columns: int = 0
    polish_steps: int = 0
    verified: bool = False

    @property
    def converged(self):
        return self.status == CONVERGED

    def as_dict(self):
        return asdict(self)


class _Evaluator:
    """Memoizes the last (value, gradient) pair; line_search asks for both at the same point."""

    def __init__(self, fun):
        self.fun = fun
        self.evaluations = 0
        self._z = None
        self._f = None
        self._g = None

    def _ensure(self, z):
        if self._z is None or not np.array_equal(z, self._z):
            self._f, self._g = self.fun(z)
            self._z = np.array(z, dtype=float)
            self.evaluations += 1

    def value(self, z):
        self._ensure(z)
        return self._f

    def gradient(self, z):
        self._ensure(z)
        return self._g.copy()


def _two_loop(g, history):
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(history):
        alpha = rho * (s @ q)
        q -= alpha * y
        alphas.append(alpha)
    if history:
        s, y, _ = history[-1]
        q *= (s @ y) / (y @ y)
    for (s, y, rho), alpha in zip(history, reversed(alphas)):
        beta = rho * (y @ q)
        q += (alpha - beta) * s
    return -q


def _search(evaluator, z, d, f, g, old_old_f, options):
    with warnings.catch_warnings():
        # LineSearchWarning is a RuntimeWarning; failure is reported through alpha=None
        warnings.simplefilter("ignore", RuntimeWarning)
        result = line_search(
            evaluator.value, evaluator.gradient, z, d, gfk=g, old_fval=f,
            old_old_fval=old_old_f, c1=options.c1, c2=options.c2,
            maxiter=options.max_line_search,
        )
    return result[0]


def minimize_lbfgs(fun, z0, options=None):
    """Minimize ``fun`` (z -> (value, gradient)) starting at ``z0``.

    Stops when the objective drops to ``objective_tol`` (converged), the
    gradient norm drops to ``grad_tol`` or ``max_iters`` is reached (stalled),
    or the line search fails twice in a row (stalled).
    """
    options = options or OptimizerOptions()
    evaluator = _Evaluator(fun)
    z = np.array(z0, dtype=float)
    f = evaluator.value(z)
    g = evaluator.gradient(z)
    history = deque(maxlen=options.memory)
    objective_history = [f]
    iterations = 0
    status = STALLED

    def report():
        return OptimizationReport(
            status=status, final_objective=float(f), final_grad_norm=float(np.linalg.norm(g)),
            iterations=iterations, objective_history=objective_history,
            evaluations=evaluator.evaluations,
        )

    if f <= options.objective_tol:
        status = CONVERGED
        return z, report()

    # First step length ~ 1/|g|, as scipy's BFGS does
    old_old_f = f + np.linalg.norm(g) / 2.0

    while iterations < options.max_iters:
        d = _two_loop(g, history)
        if not g @ d < 0:
            history.clear()
            d = -g
            old_old_f = f + np.linalg.norm(g) / 2.0

        alpha = _search(evaluator, z, d, f, g, old_old_f, options)
        if alpha is None and history:
            logger.warning(f"Line search failed at iteration {iterations}; resetting curvature history")
            history.clear()
            d = -g
            old_old_f = f + np.linalg.norm(g) / 2.0
            alpha = _search(evaluator, z, d, f, g, old_old_f, options)
        if alpha is None:
            logger.warning(f"Line search failed from steepest descent at iteration {iterations}")
            break

        z_new = z + alpha * d
        f_new = evaluator.value(z_new)
        g_new = evaluator.gradient(z_new)
        if f_new > f:
            logger.warning(f"Rejected non-descent step at iteration {iterations} ({f_new:.3e} > {f:.3e})")
            break

        s = z_new - z
        y = g_new - g
        sy = s @ y
        if sy > CURVATURE_EPS * np.linalg.norm(s) * np.linalg.norm(y):
            history.append((s, y, 1.0 / sy))

        old_old_f = None
        z, f, g = z_new, f_new, g_new
        objective_history.append(f)
        iterations += 1

        if iterations % 500 == 0:
            logger.debug(f"LBFGS iteration {iterations}: F={f:.3e}, |g|={np.linalg.norm(g):.3e}")
        if f <= options.objective_tol:
            status = CONVERGED
            break
        if np.linalg.norm(g) <= options.grad_tol:
            break

    return z, report()
