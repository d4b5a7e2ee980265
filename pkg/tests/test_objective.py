import numpy as np
import pytest

from fsbp.basis import Interval, VandermondePair, evaluate_vandermonde, make_builtin_space, make_grid, orthonormalize
from fsbp.errors import ParametrizationError
from fsbp.objective import (
    boundary_matrix,
    build_context,
    linear_jacobian,
    objective_gradient,
    objective_value,
    residual,
    value_and_gradient,
)
from fsbp.parametrize import ParametrizationMode, ParamVector, assemble_x, norm_from_params, skew_from_params


def _trapezoid_context(unit_interval, linear_space, mode="logistic_normalized"):
    pair = evaluate_vandermonde(linear_space, make_grid(unit_interval, "equidistant", n=2))
    return build_context(pair, unit_interval, mode)


def test_boundary_matrix():
    np.testing.assert_array_equal(boundary_matrix(3), np.diag([-1.0, 0.0, 1.0]))


def test_trapezoid_is_a_zero(unit_interval, linear_space):
    ctx = _trapezoid_context(unit_interval, linear_space)
    params = ParamVector(sigma=np.array([0.5]), rho=np.zeros(2))
    assert np.max(np.abs(residual(ctx, params))) < 1e-15
    assert objective_value(ctx, params) < 1e-28
    assert np.linalg.norm(objective_gradient(ctx, params).flatten()) < 1e-12


def test_constant_space_residual(reference_interval):
    space = make_builtin_space({"kind": "monomial", "degree": 0})
    pair = evaluate_vandermonde(space, make_grid(reference_interval, "equidistant", n=5))
    ctx = build_context(pair, reference_interval)
    R = residual(ctx, ParamVector.zeros(5))
    np.testing.assert_array_equal(R[:, 0], [-0.5, 0, 0, 0, 0.5])
    for rho in (np.zeros(5), np.arange(5.0)):
        assert objective_value(ctx, ParamVector(sigma=np.zeros(10), rho=rho)) == pytest.approx(0.5)


def test_empty_space(unit_interval):
    pair = VandermondePair(V=np.zeros((3, 0)), Vx=np.zeros((3, 0)))
    ctx = build_context(pair, unit_interval)
    params = ParamVector(sigma=np.ones(3), rho=np.ones(3))
    assert residual(ctx, params).shape == (3, 0)
    assert objective_value(ctx, params) == 0.0


def test_dimension_mismatch(unit_interval, linear_space):
    ctx = _trapezoid_context(unit_interval, linear_space)
    with pytest.raises(ParametrizationError):
        residual(ctx, ParamVector(sigma=np.zeros(2), rho=np.zeros(2)))


def test_target_is_minus_half_bv(unit_interval, linear_space):
    ctx = _trapezoid_context(unit_interval, linear_space)
    np.testing.assert_array_equal(ctx.target, -0.5 * boundary_matrix(2) @ ctx.V)


def _finite_difference_gradient(ctx, z, step=1e-6):
    grad = np.empty_like(z)
    for i in range(z.size):
        up, down = z.copy(), z.copy()
        up[i] += step
        down[i] -= step
        grad[i] = (value_and_gradient(ctx, up)[0] - value_and_gradient(ctx, down)[0]) / (2 * step)
    return grad


def test_gradient_matches_finite_differences(reference_interval):
    """100 seeded points over every mode, dense and banded."""
    space = make_builtin_space({"kind": "monomial", "degree": 2})
    pair, _ = orthonormalize(evaluate_vandermonde(space, make_grid(reference_interval, "equidistant", n=5)))
    rng = np.random.default_rng(7)
    configurations = [(mode, bandwidth) for mode in ParametrizationMode for bandwidth in (None, 2)]

    worst = 0.0
    for trial in range(100):
        mode, bandwidth = configurations[trial % len(configurations)]
        ctx = build_context(pair, reference_interval, mode, bandwidth)
        z = rng.standard_normal(ctx.n_sigma + ctx.n)
        analytic = value_and_gradient(ctx, z)[1]
        numeric = _finite_difference_gradient(ctx, z)
        worst = max(worst, np.max(np.abs(analytic - numeric)) / max(np.max(np.abs(analytic)), 1e-8))
    assert worst < 1e-5


def test_softmax_gradient_orthogonal_to_shift(reference_interval, rng):
    space = make_builtin_space({"kind": "monomial", "degree": 2})
    pair = evaluate_vandermonde(space, make_grid(reference_interval, "equidistant", n=6))
    ctx = build_context(pair, reference_interval, "softmax")
    params = ParamVector(sigma=rng.standard_normal(ctx.n_sigma), rho=rng.standard_normal(6))
    assert abs(np.sum(objective_gradient(ctx, params).rho)) < 1e-12


def test_structured_residual_matches_assembled(reference_interval, rng):
    space = make_builtin_space({"kind": "monomial", "degree": 3})
    pair = evaluate_vandermonde(space, make_grid(reference_interval, "equidistant", n=7))
    for bandwidth in (None, 3):
        ctx = build_context(pair, reference_interval, "logistic_normalized", bandwidth)
        params = ParamVector(sigma=rng.standard_normal(ctx.n_sigma), rho=rng.standard_normal(7))
        X = assemble_x(skew_from_params(params.sigma, 7, bandwidth),
                       norm_from_params(params.rho, reference_interval))
        assembled = X @ ctx.W.W + 0.5 * boundary_matrix(7) @ ctx.V
        assert np.max(np.abs(assembled - residual(ctx, params))) < 1e-13


def test_objective_quadratic_in_skew_part(reference_interval, rng):
    space = make_builtin_space({"kind": "monomial", "degree": 2})
    pair = evaluate_vandermonde(space, make_grid(reference_interval, "equidistant", n=5))
    ctx = build_context(pair, reference_interval)
    base = ParamVector(sigma=rng.standard_normal(ctx.n_sigma), rho=rng.standard_normal(5))
    direction = rng.standard_normal(ctx.n_sigma)

    def along(t):
        return objective_value(ctx, ParamVector(sigma=base.sigma + t * direction, rho=base.rho))

    ts = np.array([-1.0, 0.0, 1.0])
    coefficients = np.polyfit(ts, [along(t) for t in ts], 2)
    assert abs(np.polyval(coefficients, 2.5) - along(2.5)) < 1e-10 * max(1.0, along(2.5))


@pytest.mark.parametrize("bandwidth", [None, 2])
def test_linear_jacobian_reproduces_residual(reference_interval, bandwidth, rng):
    space = make_builtin_space({"kind": "monomial", "degree": 2})
    pair, _ = orthonormalize(evaluate_vandermonde(space, make_grid(reference_interval, "equidistant", n=6)))
    ctx = build_context(pair, reference_interval, "logistic_raw", bandwidth)
    params = ParamVector(sigma=rng.standard_normal(ctx.n_sigma), rho=rng.standard_normal(6))
    p = norm_from_params(params.rho, reference_interval, "logistic_raw").p
    J = linear_jacobian(ctx)
    assert J.shape == (6 * ctx.k, ctx.n_sigma + 6)
    affine = J @ np.concatenate([params.sigma, p]) + ctx.half_bv.ravel()
    np.testing.assert_allclose(affine, residual(ctx, params).ravel(), atol=1e-13)
