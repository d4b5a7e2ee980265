import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from fsbp.basis import (
    Interval,
    evaluate_vandermonde,
    hermite_functions,
    make_builtin_space,
    make_grid,
    make_space,
    orthonormalize,
    sobolev_gram,
    stack_w,
    VandermondePair,
)
from fsbp.errors import BasisError


def test_builtin_space_dimensions():
    assert make_builtin_space({"kind": "monomial", "degree": 7}).dim == 8
    assert make_builtin_space({"kind": "exponential"}).dim == 3
    assert make_builtin_space({"kind": "gaussian_advection"}).dim == 3
    assert make_builtin_space({"kind": "hermite_oscillator", "n_max": 10}).dim == 13


def test_constant_space_values():
    space = make_builtin_space({"kind": "monomial", "degree": 0})
    x = np.linspace(-3, 3, 7)
    np.testing.assert_array_equal(space.eval(0, x), np.ones(7))
    np.testing.assert_array_equal(space.eval_deriv(0, x), np.zeros(7))


@pytest.mark.parametrize("descriptor", [
    {"kind": "monomial", "degree": -1},
    {"kind": "legendre"},
    {"degree": 3},
])
def test_bad_space_descriptor(descriptor):
    with pytest.raises(BasisError):
        make_builtin_space(descriptor)


def test_hermite_recurrence_matches_closed_form():
    x = np.linspace(-2, 2, 9)
    psi, dpsi = hermite_functions(x, 3)
    weight = np.exp(-x * x / 2)
    np.testing.assert_allclose(psi[2], weight * (4 * x ** 2 - 2), atol=1e-14)
    np.testing.assert_allclose(psi[3], weight * (8 * x ** 3 - 12 * x), atol=1e-13)
    np.testing.assert_allclose(dpsi[0], -x * weight, atol=1e-15)


def test_normalized_hermite_functions():
    x = np.linspace(-10, 10, 4001)
    psi, dpsi = hermite_functions(x, 10)
    unit, dunit = hermite_functions(x, 10, normalized=True)
    norms = np.sqrt([2.0 ** n * math.factorial(n) * np.sqrt(np.pi) for n in range(11)])
    np.testing.assert_allclose(unit * norms[:, None], psi, rtol=1e-10, atol=1e-9)
    np.testing.assert_allclose(dunit * norms[:, None], dpsi, rtol=1e-10, atol=1e-8)
    gram = trapezoid(unit[:, None, :] * unit[None, :, :], x, axis=-1)
    np.testing.assert_allclose(gram, np.eye(11), atol=1e-8)
    assert np.max(np.abs(unit)) < 1.0


def test_hermite_finite_on_schrodinger_domain():
    psi, dpsi = hermite_functions(np.array([-10.0, 10.0]), 10)
    assert np.all(np.isfinite(psi)) and np.all(np.isfinite(dpsi))
    assert abs(psi[0, 0]) < 1e-21


@pytest.mark.parametrize("descriptor", [
    {"kind": "monomial", "degree": 4},
    {"kind": "exponential"},
    {"kind": "gaussian_advection"},
    {"kind": "hermite_oscillator", "n_max": 6},
])
def test_derivatives_match_finite_differences(descriptor):
    """Central differences with step 1e-6 times the interval length agree with the analytic derivatives."""
    space = make_builtin_space(descriptor)
    x = np.linspace(-0.9, 0.9, 11)
    step = 1e-6 * 2.0
    for k in range(space.dim):
        numeric = (space.eval(k, x + step) - space.eval(k, x - step)) / (2 * step)
        exact = space.eval_deriv(k, x)
        np.testing.assert_allclose(numeric, exact, rtol=1e-6, atol=1e-7)


def test_equidistant_grid(reference_interval):
    grid = make_grid(reference_interval, "equidistant", n=3)
    np.testing.assert_array_equal(grid.nodes, [-1.0, 0.0, 1.0])


def test_explicit_grid_accepted_as_is(reference_interval):
    nodes = [-1, -0.62, -0.56, -0.53, -0.49, -0.36, 0.06, 0.20, 0.75, 1]
    grid = make_grid(reference_interval, "explicit", nodes=nodes)
    np.testing.assert_array_equal(grid.nodes, nodes)


@pytest.mark.parametrize("nodes", [[0, 0, 1], [0, 0.5], [0.1, 0.5, 1.0], [0, np.nan, 1]])
def test_explicit_grid_rejected(unit_interval, nodes):
    with pytest.raises(BasisError):
        make_grid(unit_interval, "explicit", nodes=nodes)


def test_lobatto_grids_include_endpoints(reference_interval):
    for kind in ("chebyshev_lobatto", "gauss_lobatto"):
        grid = make_grid(reference_interval, kind, n=6)
        assert grid.nodes[0] == -1.0 and grid.nodes[-1] == 1.0
        assert np.all(np.diff(grid.nodes) > 0)
        np.testing.assert_allclose(grid.nodes, -grid.nodes[::-1], atol=1e-14)


def test_vandermonde_linear(unit_interval, linear_space):
    pair = evaluate_vandermonde(linear_space, make_grid(unit_interval, "equidistant", n=2))
    np.testing.assert_array_equal(pair.V, [[1, 0], [1, 1]])
    np.testing.assert_array_equal(pair.Vx, [[0, 1], [0, 1]])


def test_vandermonde_exponential(unit_interval):
    grid = make_grid(unit_interval, "equidistant", n=5)
    pair = evaluate_vandermonde(make_builtin_space({"kind": "exponential"}), grid)
    np.testing.assert_allclose(pair.V[:, 2], np.exp(grid.nodes))
    np.testing.assert_array_equal(pair.Vx[:, 2], pair.V[:, 2])


def test_vandermonde_rejects_non_finite(unit_interval):
    space = make_space("log", [np.log], [lambda x: 1.0 / x])
    with pytest.raises(BasisError):
        evaluate_vandermonde(space, make_grid(unit_interval, "equidistant", n=3))


def test_sobolev_gram_known_values(unit_interval, linear_space):
    grid = make_grid(unit_interval, "equidistant", n=2)
    pair = evaluate_vandermonde(linear_space, grid)
    np.testing.assert_array_equal(sobolev_gram(pair), [[2, 1], [1, 3]])
    constant = VandermondePair(V=pair.V[:, :1], Vx=pair.Vx[:, :1])
    np.testing.assert_array_equal(sobolev_gram(constant), [[2]])


def test_stack_w_sign_convention(unit_interval, linear_space):
    pair = evaluate_vandermonde(linear_space, make_grid(unit_interval, "equidistant", n=2))
    W = stack_w(pair)
    np.testing.assert_array_equal(W.W[:, 0], [1, 1, 0, 0])
    np.testing.assert_array_equal(W.W[:, 1], [0, 1, -1, -1])
    top, bottom = W.split()
    np.testing.assert_array_equal(top, pair.V)
    np.testing.assert_array_equal(bottom, -pair.Vx)


def test_orthonormalize_first_column(unit_interval, linear_space):
    pair = evaluate_vandermonde(linear_space, make_grid(unit_interval, "equidistant", n=2))
    ortho, retained = orthonormalize(pair)
    assert retained == 2
    np.testing.assert_allclose(stack_w(ortho).W[:, 0], np.array([1, 1, 0, 0]) / np.sqrt(2), atol=1e-15)


@pytest.mark.parametrize("descriptor,interval,n", [
    ({"kind": "monomial", "degree": 7}, (-1, 1), 16),
    ({"kind": "exponential"}, (0, 1), 5),
    ({"kind": "gaussian_advection"}, (-1, 1), 5),
    ({"kind": "hermite_oscillator", "n_max": 10}, (-10, 10), 100),
])
def test_orthonormality_and_span(descriptor, interval, n):
    space = make_builtin_space(descriptor)
    pair = evaluate_vandermonde(space, make_grid(Interval(*interval), "equidistant", n=n))
    ortho, retained = orthonormalize(pair)
    W = stack_w(ortho).W
    assert np.max(np.abs(W.T @ W - np.eye(retained))) < 1e-10

    original = np.vstack([pair.V, -pair.Vx])
    coefficients = W.T @ original
    residual = original - W @ coefficients
    scale = np.maximum(1.0, np.linalg.norm(original, axis=0))
    assert np.max(np.linalg.norm(residual, axis=0) / scale) < 1e-8


def test_orthonormalize_is_idempotent(reference_interval):
    space = make_builtin_space({"kind": "monomial", "degree": 3})
    pair = evaluate_vandermonde(space, make_grid(reference_interval, "equidistant", n=8))
    once, _ = orthonormalize(pair)
    twice, _ = orthonormalize(once)
    np.testing.assert_allclose(np.abs(twice.V), np.abs(once.V), atol=1e-12)
    np.testing.assert_allclose(np.abs(twice.Vx), np.abs(once.Vx), atol=1e-12)


def test_orthonormalize_drops_duplicate_column(unit_interval):
    space = make_space(
        "duplicated",
        [np.ones_like, np.ones_like, lambda x: x],
        [np.zeros_like, np.zeros_like, np.ones_like],
    )
    pair = evaluate_vandermonde(space, make_grid(unit_interval, "equidistant", n=4))
    _, retained = orthonormalize(pair)
    assert retained == 2


def test_orthonormalize_all_degenerate(unit_interval):
    space = make_space("zero", [np.zeros_like], [np.zeros_like])
    pair = evaluate_vandermonde(space, make_grid(unit_interval, "equidistant", n=3))
    with pytest.raises(BasisError):
        orthonormalize(pair)


def test_gram_schmidt_variants_agree(reference_interval):
    space = make_builtin_space({"kind": "monomial", "degree": 4})
    pair = evaluate_vandermonde(space, make_grid(reference_interval, "equidistant", n=10))
    modified, _ = orthonormalize(pair, variant="modified")
    classical, _ = orthonormalize(pair, variant="classical")
    np.testing.assert_allclose(modified.V, classical.V, atol=1e-8)
    np.testing.assert_allclose(modified.Vx, classical.Vx, atol=1e-8)
