"""Residual R = XW + BV/2, objective F = ||R||_F^2 and its analytic gradient.

With X = [S, P] and W = [V; -Vx] the residual is evaluated in structured form

    R = S V - P Vx + B V / 2

so X is never assembled: P is a diagonal scaling and S V is a triangle product.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .basis import stack_w
from .errors import ParametrizationError
from .parametrize import (
    ParametrizationMode,
    ParamVector,
    norm_from_params,
    norm_gradient,
    skew_from_params,
    skew_indices,
)


def boundary_matrix(n):
    """B = diag(-1, 0, ..., 0, 1)."""
    B = np.zeros((n, n))
    B[0, 0] = -1.0
    B[-1, -1] = 1.0
    return B


@dataclass(frozen=True, eq=False)
class ObjectiveContext:
    V: np.ndarray
    Vx: np.ndarray
    W: object
    interval: object
    mode: ParametrizationMode
    bandwidth: Optional[int]
    half_bv: np.ndarray
    rows: np.ndarray
    cols: np.ndarray

    @property
    def n(self):
        return self.V.shape[0]

    @property
    def k(self):
        return self.V.shape[1]

    @property
    def n_sigma(self):
        return self.rows.size

    @property
    def target(self):
        """T = -BV/2, the right-hand side of XW = T."""
        return -self.half_bv


def build_context(pair, interval, mode=ParametrizationMode.LOGISTIC_NORMALIZED, bandwidth=None):
    mode = ParametrizationMode.parse(mode)
    n = pair.n
    rows, cols = skew_indices(n, bandwidth)
    half_bv = np.zeros_like(pair.V)
    half_bv[0] = -0.5 * pair.V[0]
    half_bv[-1] = 0.5 * pair.V[-1]
    return ObjectiveContext(
        V=pair.V, Vx=pair.Vx, W=stack_w(pair), interval=interval, mode=mode,
        bandwidth=bandwidth, half_bv=half_bv, rows=rows, cols=cols,
    )


def _check_params(ctx, params):
    if params.sigma.size != ctx.n_sigma or params.rho.size != ctx.n:
        raise ParametrizationError(
            f"parameter sizes (sigma={params.sigma.size}, rho={params.rho.size}) do not match "
            f"context (sigma={ctx.n_sigma}, rho={ctx.n})"
        )


def residual(ctx, params):
    _check_params(ctx, params)
    S = skew_from_params(params.sigma, ctx.n, ctx.bandwidth)
    P = norm_from_params(params.rho, ctx.interval, ctx.mode)
    return S.matmul(ctx.V) - P.p[:, None] * ctx.Vx + ctx.half_bv


def objective_value(ctx, params):
    R = residual(ctx, params)
    return float(np.sum(R * R))


def _gradient_from_residual(ctx, params, R):
    G = 2.0 * R
    # dF/dS = G V^T, projected onto the parametrized skew pairs
    grad_sigma = (np.einsum("ij,ij->i", G[ctx.rows], ctx.V[ctx.cols])
                  - np.einsum("ij,ij->i", G[ctx.cols], ctx.V[ctx.rows]))
    d = -np.einsum("ij,ij->i", G, ctx.Vx)
    grad_rho = norm_gradient(params.rho, ctx.interval, ctx.mode, d)
    return ParamVector(sigma=grad_sigma, rho=grad_rho)


def objective_gradient(ctx, params):
    return _gradient_from_residual(ctx, params, residual(ctx, params))


def value_and_gradient(ctx, z):
    """Objective and gradient on the flat vector z = [sigma, rho], as the LBFGS driver expects."""
    params = ParamVector.from_flat(z, ctx.n_sigma)
    R = residual(ctx, params)
    return float(np.sum(R * R)), _gradient_from_residual(ctx, params, R).flatten()


def linear_jacobian(ctx):
    """Jacobian of vec(R) (row-major) with respect to [sigma, p].

    R is affine in sigma and in the weights p themselves, so this matrix is
    constant: vec(R) = J [sigma; p] + vec(BV/2).
    """
    n, k, n_sigma = ctx.n, ctx.k, ctx.n_sigma
    J = np.zeros((n, k, n_sigma + n))
    t = np.arange(n_sigma)
    J[ctx.rows, :, t] = ctx.V[ctx.cols]
    J[ctx.cols, :, t] = -ctx.V[ctx.rows]
    nodes = np.arange(n)
    J[nodes, :, n_sigma + nodes] = -ctx.Vx
    return J.reshape(n * k, n_sigma + n)
