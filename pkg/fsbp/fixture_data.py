import logging

import numpy as np
from numpy.polynomial import legendre

from .basis import Interval, evaluate_vandermonde, gauss_lobatto_points, make_builtin_space, make_grid
from .errors import FsbpError
from .operator_optimizer import FsbpOperator, OperatorOptimizer
from .operator_verifier import OperatorVerifier

# Relative and absolute half-units of the last printed digit
PRINT_RELATIVE = 5e-4
PRINT_ABSOLUTE = 5e-5
# Margin over the first-order propagation of print rounding
ROUNDING_MARGIN = 2.0


class FixtureDataProvider:
    """Published FSBP operators, reference grids and their rounding-aware verification."""

    def __init__(self):
        self.tables = {
            "fsbp_n9_degree4": {
                "description": "optimization-based operator, 9 equidistant nodes, exact for degree 4",
                "space": {"kind": "monomial", "degree": 4},
                "interval": [-1.0, 1.0],
                "p": [0.0788, 0.3432, 0.1873, 0.2349, 0.3117, 0.2349, 0.1873, 0.3432, 0.0788],
                "Q": [
                    [-0.5, 0.6136, 0.005545, -0.09575, -0.07992, 0.02095, 0.04167, 0.008644, -0.01473],
                    [-0.6136, 0, 0.3198, 0.3079, 0.1251, -0.09406, -0.08702, 0.03314, 0.008644],
                    [-0.005545, -0.3198, 0, 0.142, 0.1949, 0.06355, -0.02978, -0.08702, 0.04167],
                    [0.09575, -0.3079, -0.142, 0, 0.178, 0.1858, 0.06355, -0.09406, 0.02095],
                    [0.07992, -0.1251, -0.1949, -0.178, 0, 0.178, 0.1949, 0.1251, -0.07992],
                    [-0.02095, 0.09406, -0.06355, -0.1858, -0.178, 0, 0.142, 0.3079, -0.09575],
                    [-0.04167, 0.08702, 0.02978, -0.06355, -0.1949, -0.142, 0, 0.3198, 0.005545],
                    [-0.008644, -0.03314, 0.08702, 0.09406, -0.1251, -0.3079, -0.3198, 0, 0.6136],
                    [0.01473, -0.008644, -0.04167, -0.02095, 0.07992, 0.09575, -0.005545, -0.6136, 0.5],
                ],
                "spectral_norm": 10.84,
            },
            "classical_n9_order4": {
                "description": "classical diagonal-norm FD-SBP operator, 9 equidistant nodes, boundary order 2",
                "space": {"kind": "monomial", "degree": 2},
                "interval": [-1.0, 1.0],
                "p": [0.08854, 0.3073, 0.224, 0.2552, 0.25, 0.2552, 0.224, 0.3073, 0.08854],
                "Q": [
                    [-0.5, 0.6146, -0.08333, -0.03125, 0, 0, 0, 0, 0],
                    [-0.6146, 0, 0.6146, 0, 0, 0, 0, 0, 0],
                    [0.08333, -0.6146, 0, 0.6146, -0.08333, 0, 0, 0, 0],
                    [0.03125, 0, -0.6146, 0, 0.6667, -0.08333, 0, 0, 0],
                    [0, 0, 0.08333, -0.6667, 0, 0.6667, -0.08333, 0, 0],
                    [0, 0, 0, 0.08333, -0.6667, 0, 0.6146, 0, -0.03125],
                    [0, 0, 0, 0, 0.08333, -0.6146, 0, 0.6146, -0.08333],
                    [0, 0, 0, 0, 0, 0, -0.6146, 0, 0.6146],
                    [0, 0, 0, 0, 0, 0.03125, 0.08333, -0.6146, 0.5],
                ],
                "spectral_norm": 9.44,
            },
            "exponential_n5": {
                "description": "span{1, x, e^x} on [0, 1], 5 equidistant nodes",
                "space": {"kind": "exponential"},
                "interval": [0.0, 1.0],
                "p": [0.076, 0.3621, 0.1245, 0.3609, 0.0766],
                "Q": [
                    [-0.5, 0.653, -0.0350, -0.1927, 0.0748],
                    [-0.653, 0, 0.3198, 0.5238, -0.1907],
                    [0.03503, -0.3198, 0, 0.3215, -0.0367],
                    [0.1927, -0.5238, -0.3215, 0, 0.6526],
                    [-0.0748, 0.1907, 0.0367, -0.6526, 0.5],
                ],
            },
            "exponential_n4": {
                "description": "span{1, x, e^x} on [0, 1], 4 equidistant nodes",
                "space": {"kind": "exponential"},
                "interval": [0.0, 1.0],
                "p": [0.1413, 0.3301, 0.4159, 0.1127],
                "Q": [
                    [-0.5, 0.5097, 0.0568, -0.0665],
                    [-0.5097, 0, 0.5386, -0.029],
                    [-0.0568, -0.5386, 0, 0.5955],
                    [0.0665, 0.029, -0.5955, 0.5],
                ],
            },
        }

        # Arbitrary grids with fixed endpoints, printed to two decimals
        self.random_grids = {
            10: [-1, -0.62, -0.56, -0.53, -0.49, -0.36, 0.06, 0.20, 0.75, 1],
            20: [-1, -0.95, -0.86, -0.79, -0.72, -0.62, -0.56, -0.34, -0.06,
                 0.06, 0.08, 0.12, 0.29, 0.53, 0.65, 0.74, 0.78, 0.83, 0.87, 1],
        }
        self.verifier = OperatorVerifier()
        self.logger = logging.getLogger(__name__)

    def names(self):
        return list(self.tables)

    def _table(self, name):
        if name not in self.tables:
            raise FsbpError(f"unknown fixture '{name}', expected one of {', '.join(self.tables)}")
        return self.tables[name]

    def space(self, name):
        return make_builtin_space(self._table(name)["space"])

    def fixture(self, name):
        """The printed operator on its equidistant grid."""
        table = self._table(name)
        interval = Interval(*table["interval"])
        grid = make_grid(interval, "equidistant", n=len(table["p"]))
        return FsbpOperator(grid=grid, p=table["p"], Q=table["Q"], space_name=self.space(name).name,
                            constants_exact=True)

    def random_grid(self, n):
        if n not in self.random_grids:
            raise FsbpError(f"no random grid with {n} nodes, available: {sorted(self.random_grids)}")
        return make_grid(Interval(-1.0, 1.0), "explicit", nodes=self.random_grids[n])

    @staticmethod
    def print_uncertainty(values):
        """Half a unit in the last printed digit; exact zeros and the +-1/2 corners carry none."""
        values = np.asarray(values, dtype=float)
        exact = (values == 0.0) | (np.abs(values) == 0.5)
        return np.where(exact, 0.0, PRINT_RELATIVE * np.abs(values) + PRINT_ABSOLUTE)

    def rounding_tolerances(self, name):
        """Propagate print rounding of every entry linearly into each verifier defect."""
        op = self.fixture(name)
        pair = evaluate_vandermonde(self.space(name), op.grid)
        u_q = self.print_uncertainty(op.Q)
        u_p = self.print_uncertainty(op.p)

        sbp = float(np.max(u_q + u_q.T))
        bound = (u_q @ np.abs(pair.V) + u_p[:, None] * np.abs(pair.Vx)) / op.p[:, None]
        exactness = float(np.max(bound))
        constants = float(np.sum(u_p))
        return {
            "sbp": ROUNDING_MARGIN * sbp,
            "exactness": ROUNDING_MARGIN * exactness,
            "constants": ROUNDING_MARGIN * constants,
        }

    def verify(self, name):
        tolerances = self.rounding_tolerances(name)
        report = self.verifier.check_operator(
            self.fixture(name), self.space(name),
            sbp_tol=tolerances["sbp"], exactness_tol=tolerances["exactness"],
            constants_tol=tolerances["constants"],
        )
        level = logging.INFO if report.passed else logging.WARNING
        self.logger.log(level, f"Fixture {name}: pass={report.passed}, sbp={report.sbp_defect:.2e}, "
                               f"exactness={report.exactness_defect:.2e}, |D|={report.spectral_norm_D:.2f}")
        return report

    def verify_all(self):
        return {name: self.verify(name) for name in self.tables}

    def construction_comparison(self, name="exponential_n5", optimizer=None):
        """Two-step (quadrature first) against optimization-based construction on a fixture's grid."""
        optimizer = optimizer or OperatorOptimizer()
        space = self.space(name)
        printed = self.fixture(name)
        two_step, two_step_report = optimizer.two_step_operator(space, printed.grid)
        optimized, optimized_report = optimizer.construct_operator(space, printed.grid)
        comparison = {
            "fixture": name,
            "two_step": two_step_report.as_dict(),
            "optimized_objective": optimized_report.final_objective,
            "p_difference": float(np.max(np.abs(two_step.p - optimized.p))),
            "Q_difference": float(np.max(np.abs(two_step.Q - optimized.Q))),
            "printed_p_difference": float(np.max(np.abs(two_step.p - printed.p))),
        }
        self.logger.info(f"Two-step vs optimized on {name}: |dp|={comparison['p_difference']:.2e}, "
                         f"|dQ|={comparison['Q_difference']:.2e}")
        return comparison


def gauss_lobatto_operator(n, interval=Interval(-1.0, 1.0)):
    """Classical SBP operator on n Gauss-Lobatto nodes: Lagrange differentiation with the Lobatto weights."""
    reference = gauss_lobatto_points(n)
    weights = 2.0 / (n * (n - 1) * legendre.legval(reference, [0] * (n - 1) + [1]) ** 2)

    # Barycentric differentiation matrix on the reference nodes
    diff = reference[:, None] - reference[None, :]
    np.fill_diagonal(diff, 1.0)
    bary = 1.0 / np.prod(diff, axis=1)
    D = (bary[None, :] / bary[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -np.sum(D, axis=1))

    half = 0.5 * interval.length
    grid = make_grid(interval, "gauss_lobatto", n=n)
    p = half * weights
    Q = p[:, None] * (D / half)
    return FsbpOperator(grid=grid, p=p, Q=Q, space_name=f"monomial_d{n - 1}", constants_exact=True)
