import numpy as np
import pytest

from fsbp.basis import Interval
from fsbp.errors import ParametrizationError
from fsbp.parametrize import (
    NormMatrix,
    ParametrizationMode,
    ParamVector,
    assemble_x,
    norm_from_params,
    params_from_norm,
    params_from_skew,
    skew_from_params,
    skew_length,
)


def test_zero_sigma_gives_zero_matrix():
    np.testing.assert_array_equal(skew_from_params(np.zeros(6), 4).matrix, np.zeros((4, 4)))


def test_dense_fill_is_row_major():
    sigma = np.arange(1.0, 7.0)
    S = skew_from_params(sigma, 4).matrix
    assert (S[0, 1], S[0, 2], S[0, 3], S[1, 2], S[1, 3], S[2, 3]) == (1, 2, 3, 4, 5, 6)
    np.testing.assert_array_equal(S, -S.T)


def test_banded_fill():
    sigma = np.arange(1.0, 6.0)
    S = skew_from_params(sigma, 4, bandwidth=2).matrix
    assert S[0, 3] == 0.0
    assert (S[0, 1], S[0, 2], S[1, 2], S[1, 3], S[2, 3]) == (1, 2, 3, 4, 5)
    np.testing.assert_array_equal(S, -S.T)


def test_banded_matmul_matches_dense(rng):
    sigma = rng.standard_normal(skew_length(7, 3))
    skew = skew_from_params(sigma, 7, bandwidth=3)
    A = rng.standard_normal((7, 4))
    np.testing.assert_allclose(skew.matmul(A), skew.matrix @ A, atol=1e-14)


@pytest.mark.parametrize("n,bandwidth,size", [(4, None, 5), (4, 0, 1), (4, 4, 3), (4, 2, 6)])
def test_skew_parameter_errors(n, bandwidth, size):
    with pytest.raises(ParametrizationError):
        skew_from_params(np.zeros(size), n, bandwidth)


def test_params_from_skew_round_trip(rng):
    assert not np.any(params_from_skew(np.zeros((5, 5))))
    A = rng.standard_normal((6, 6))
    S = A - A.T
    sigma = params_from_skew(S)
    assert np.max(np.abs(skew_from_params(sigma, 6).matrix - S)) == 0.0


def test_params_from_skew_rejects_symmetric():
    with pytest.raises(ParametrizationError):
        params_from_skew(np.ones((3, 3)))


def test_norm_known_values():
    P = norm_from_params(np.zeros(4), Interval(-1, 1), "logistic_normalized")
    np.testing.assert_allclose(P.p, [0.5] * 4)
    assert P.constants_exact

    P = norm_from_params(np.zeros(5), Interval(0, 1), "softmax")
    np.testing.assert_allclose(P.p, [0.2] * 5)

    P = norm_from_params(np.array([np.log(3.0), 0.0]), Interval(0, 1), "logistic_raw")
    np.testing.assert_allclose(P.p, [0.75, 0.5])
    assert not P.constants_exact


@pytest.mark.parametrize("mode", list(ParametrizationMode))
def test_norm_admissible_for_extreme_rho(mode, rng):
    rho = 40.0 * rng.standard_normal(9)
    rho[0] = -800.0
    P = norm_from_params(rho, Interval(-1, 1), mode)
    assert np.all(P.p > 0)
    if mode.constants_exact:
        assert abs(np.sum(P.p) - 2.0) < 1e-12


def test_norm_rejects_non_finite():
    with pytest.raises(ParametrizationError):
        norm_from_params(np.array([0.0, np.inf]), Interval(0, 1))


def test_unknown_mode():
    with pytest.raises(ParametrizationError):
        ParametrizationMode.parse("tanh")


def test_logistic_raw_monotone():
    grid = np.linspace(-5, 5, 21)
    values = [norm_from_params(np.array([r, 0.0]), Interval(0, 1), "logistic_raw").p[0] for r in grid]
    assert np.all(np.diff(values) > 0)


def test_softmax_shift_invariance(rng):
    rho = rng.standard_normal(6)
    base = norm_from_params(rho, Interval(0, 2), "softmax").p
    shifted = norm_from_params(rho + 3.7, Interval(0, 2), "softmax").p
    np.testing.assert_allclose(shifted, base, atol=1e-14)


def test_assemble_x():
    X = assemble_x(skew_from_params(np.zeros(1), 2),
                   NormMatrix(p=np.array([0.5, 0.5]), interval=Interval(0, 1), constants_exact=True))
    np.testing.assert_array_equal(X, [[0, 0, 0.5, 0], [0, 0, 0, 0.5]])


def test_param_vector_flat_round_trip(rng):
    params = ParamVector(sigma=rng.standard_normal(10), rho=rng.standard_normal(5))
    back = ParamVector.from_flat(params.flatten(), 10)
    np.testing.assert_array_equal(back.sigma, params.sigma)
    np.testing.assert_array_equal(back.rho, params.rho)


@pytest.mark.parametrize("mode", list(ParametrizationMode))
def test_weights_map_back_to_rho(mode):
    interval = Interval(-1.0, 1.0)
    p = np.array([0.1, 0.6, 0.7, 0.6])
    rho = params_from_norm(p, mode)
    np.testing.assert_allclose(norm_from_params(rho, interval, mode).p, p, rtol=1e-13)


def test_weights_outside_mode_range():
    assert params_from_norm([0.5, 1.5], "logistic_raw") is None
    assert params_from_norm([0.0, 2.0], "logistic_normalized") is None
    assert params_from_norm([-0.1, 2.1], "softmax") is None
