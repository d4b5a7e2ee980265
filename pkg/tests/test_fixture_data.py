import numpy as np
import pytest

from fsbp.basis import Interval, evaluate_vandermonde, make_builtin_space
from fsbp.errors import FsbpError
from fsbp.fixture_data import FixtureDataProvider, gauss_lobatto_operator
from fsbp.operator_verifier import OperatorVerifier


@pytest.fixture(scope="module")
def provider():
    return FixtureDataProvider()


def test_all_published_operators_pass(provider):
    reports = provider.verify_all()
    assert set(reports) == {"fsbp_n9_degree4", "classical_n9_order4", "exponential_n5", "exponential_n4"}
    for name, report in reports.items():
        assert report.passed, (name, report.as_dict())


def test_published_tables_are_constants_exact(provider):
    for name in provider.names():
        op = provider.fixture(name)
        assert abs(np.sum(op.p) - op.grid.interval.length) <= 1e-3
        assert np.all(op.p > 0)


def test_rounding_tolerances_are_small(provider):
    tolerances = provider.rounding_tolerances("fsbp_n9_degree4")
    assert 0 < tolerances["sbp"] < 2e-3
    assert 0 < tolerances["constants"] < 1e-2
    assert 0 < tolerances["exactness"] < 0.1


def test_print_uncertainty():
    u = FixtureDataProvider.print_uncertainty([0.0, 0.5, -0.5, 0.1234])
    np.testing.assert_allclose(u, [0.0, 0.0, 0.0, 5e-4 * 0.1234 + 5e-5])


def test_classical_fixture_is_banded(provider):
    Q = provider.fixture("classical_n9_order4").Q
    assert not np.any(np.triu(Q, 4))


def test_unknown_fixture(provider):
    with pytest.raises(FsbpError):
        provider.fixture("missing")


def test_random_grids(provider):
    for n in (10, 20):
        grid = provider.random_grid(n)
        assert grid.n == n
        assert grid.nodes[0] == -1.0 and grid.nodes[-1] == 1.0
    with pytest.raises(FsbpError):
        provider.random_grid(15)


@pytest.mark.parametrize("n", range(2, 9))
def test_gauss_lobatto_operator(n):
    op = gauss_lobatto_operator(n)
    space = make_builtin_space({"kind": "monomial", "degree": n - 1})
    report = OperatorVerifier().check_operator(op, space, tol=1e-11)
    assert report.passed, report.as_dict()


def test_gauss_lobatto_weights_known_values():
    np.testing.assert_allclose(gauss_lobatto_operator(3).p, [1 / 3, 4 / 3, 1 / 3], atol=1e-14)
    np.testing.assert_allclose(gauss_lobatto_operator(4).p, [1 / 6, 5 / 6, 5 / 6, 1 / 6], atol=1e-14)


def test_gauss_lobatto_operator_on_mapped_interval():
    op = gauss_lobatto_operator(5, Interval(0.0, 3.0))
    space = make_builtin_space({"kind": "monomial", "degree": 4})
    pair = evaluate_vandermonde(space, op.grid)
    assert np.sum(op.p) == pytest.approx(3.0)
    assert np.max(np.abs(op.D @ pair.V - pair.Vx)) < 1e-9
