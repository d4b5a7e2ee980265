import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from fsbp.basis import Interval, make_builtin_space, make_grid  # noqa: E402
from fsbp.operator_optimizer import FsbpOperator  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


@pytest.fixture
def unit_interval():
    return Interval(0.0, 1.0)


@pytest.fixture
def reference_interval():
    return Interval(-1.0, 1.0)


@pytest.fixture
def linear_space():
    return make_builtin_space({"kind": "monomial", "degree": 1})


@pytest.fixture
def trapezoid(unit_interval):
    """The unique two-node operator on [0, 1]: p = (1/2, 1/2), Q = [[-1/2, 1/2], [-1/2, 1/2]]."""
    grid = make_grid(unit_interval, "equidistant", n=2)
    return FsbpOperator(grid=grid, p=[0.5, 0.5], Q=[[-0.5, 0.5], [-0.5, 0.5]], space_name="monomial_d1")
