"""Function-space summation-by-parts operators built by unconstrained optimization."""
from .basis import FunctionSpace, Grid, Interval, make_builtin_space, make_grid, make_space
from .lbfgs import OptimizationReport, OptimizerOptions
from .operator_optimizer import FsbpOperator, OperatorOptimizer
from .operator_verifier import OperatorVerifier, VerificationReport
from .parametrize import ParametrizationMode

__version__ = "1.0.0"

__all__ = [
    "FunctionSpace",
    "Grid",
    "Interval",
    "make_builtin_space",
    "make_grid",
    "make_space",
    "OptimizationReport",
    "OptimizerOptions",
    "FsbpOperator",
    "OperatorOptimizer",
    "OperatorVerifier",
    "VerificationReport",
    "ParametrizationMode",
]
