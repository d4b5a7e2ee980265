import logging
from dataclasses import dataclass, field

import numpy as np

from .basis import evaluate_vandermonde
from .errors import FsbpError, VerificationError
from .objective import boundary_matrix


@dataclass
class VerificationReport:
    sbp_defect: float
    exactness_defect: float
    min_weight: float
    constants_defect: float
    spectral_norm_D: float
    passed: bool
    tolerances: dict = field(default_factory=dict)
    # max |P^{-1}QV - Vx| per column divided by max(1, max|f|, max|f'|); informational only
    scaled_exactness_defect: float = float("nan")

    def as_dict(self):
        return {
            "sbp_defect": self.sbp_defect,
            "exactness_defect": self.exactness_defect,
            "scaled_exactness_defect": self.scaled_exactness_defect,
            "min_weight": self.min_weight,
            "constants_defect": self.constants_defect,
            "spectral_norm_D": self.spectral_norm_D,
            "pass": self.passed,
            "tolerances": dict(self.tolerances),
        }


def column_scales(pair):
    """Per-column scale max(1, max|f_k|, max|f_k'|) for the dimensionless exactness figure."""
    if pair.k == 0:
        return np.ones(0)
    return np.maximum(1.0, np.maximum(np.max(np.abs(pair.V), axis=0), np.max(np.abs(pair.Vx), axis=0)))


class OperatorVerifier:
    """Certifies FSBP operators: SBP property, F-exactness, positivity and constants exactness."""

    def __init__(self, spectral_tol=1e-10, max_power_iterations=100_000):
        self.spectral_tol = spectral_tol
        self.max_power_iterations = max_power_iterations
        self.logger = logging.getLogger(__name__)

    def check_operator(self, op, space, tol=1e-10, sbp_tol=None, exactness_tol=None, constants_tol=None):
        """Compute every defect of ``op`` against the original basis of ``space``.

        Never raises on a bad operator; failures show up as large defects and
        ``passed = False``.
        """
        tolerances = {
            "sbp": tol if sbp_tol is None else sbp_tol,
            "exactness": tol if exactness_tol is None else exactness_tol,
            "constants": tol if constants_tol is None else constants_tol,
        }
        p = np.asarray(op.p, dtype=float)
        Q = np.asarray(op.Q, dtype=float)
        n = p.size

        sbp_defect = float(np.max(np.abs(Q + Q.T - boundary_matrix(n))))
        min_weight = float(np.min(p))
        constants_defect = float(abs(np.sum(p) - op.grid.interval.length))

        try:
            pair = evaluate_vandermonde(space, op.grid)
            with np.errstate(divide="ignore", invalid="ignore"):
                error = np.abs((Q @ pair.V) / p[:, None] - pair.Vx)
            exactness_defect = float(np.max(error)) if error.size else 0.0
            scaled_defect = float(np.max(error / column_scales(pair))) if error.size else 0.0
            if not np.isfinite(exactness_defect):
                exactness_defect = scaled_defect = float("inf")
        except FsbpError as e:
            self.logger.error(f"Could not evaluate space '{space.name}' on operator grid: {str(e)}")
            exactness_defect = scaled_defect = float("inf")

        try:
            with np.errstate(divide="ignore", invalid="ignore"):
                spectral = self.spectral_norm(Q / p[:, None], self.spectral_tol)
        except (VerificationError, FloatingPointError) as e:
            self.logger.warning(f"Spectral norm unavailable: {str(e)}")
            spectral = float("nan")

        passed = (
            sbp_defect <= tolerances["sbp"]
            and exactness_defect <= tolerances["exactness"]
            and min_weight > 0
            and (not op.constants_exact or constants_defect <= tolerances["constants"])
        )
        return VerificationReport(
            sbp_defect=sbp_defect, exactness_defect=exactness_defect, min_weight=min_weight,
            constants_defect=constants_defect, spectral_norm_D=spectral, passed=bool(passed),
            tolerances=tolerances, scaled_exactness_defect=scaled_defect,
        )

    def spectral_norm(self, M, tol=1e-10):
        """Largest singular value by power iteration on M^T M.

        The start vector is all-ones plus a linear ramp: all-ones alone lies in
        the kernel of every derivative operator exact for constants.
        """
        if not tol > 0:
            raise VerificationError(f"tol must be positive, got {tol}")
        M = np.asarray(M, dtype=float)
        if not np.all(np.isfinite(M)):
            raise VerificationError("matrix has non-finite entries")
        if not np.any(M):
            return 0.0

        cols = M.shape[1]
        x = np.ones(cols) + np.linspace(0.0, 1.0, cols)
        x /= np.linalg.norm(x)
        estimate = 0.0
        for _ in range(self.max_power_iterations):
            Mx = M @ x
            y = M.T @ Mx
            updated = float(Mx @ Mx)
            norm = np.linalg.norm(y)
            if norm == 0.0:
                # start vector in the kernel; restart from a fixed pseudo-random vector
                x = np.random.default_rng(0).standard_normal(cols)
                x /= np.linalg.norm(x)
                continue
            x = y / norm
            if abs(updated - estimate) <= tol * updated:
                return float(np.sqrt(updated))
            estimate = updated
        raise VerificationError(
            f"power iteration did not converge in {self.max_power_iterations} iterations"
        )

    def quadrature_error(self, op, integrand, exact_integral):
        values = np.broadcast_to(np.asarray(integrand(op.grid.nodes), dtype=float), op.grid.nodes.shape)
        return float(abs(np.dot(op.p, values) - exact_integral))

    def integration_by_parts_defect(self, op, space):
        """max over basis pairs of |u^T P v' + u'^T P v - u^T B v|.

        Zero exactly when the quadrature in P integrates every (f g)' with f, g
        in the space.
        """
        pair = evaluate_vandermonde(space, op.grid)
        P = np.diag(op.p)
        B = boundary_matrix(op.grid.n)
        defect = pair.V.T @ P @ pair.Vx + pair.Vx.T @ P @ pair.V - pair.V.T @ B @ pair.V
        return float(np.max(np.abs(defect))) if defect.size else 0.0
