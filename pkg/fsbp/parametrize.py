"""Unconstrained parametrization of the admissible set X = [S, P].

sigma fills the strict upper triangle of the skew part S (row-major, optionally
restricted to a band), rho is mapped to a positive diagonal norm matrix P.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.special import expit, logit, softmax

from .errors import ParametrizationError

# Floor for the pre-weights of every mode; keeps trial points of a line search strictly positive
LOGISTIC_FLOOR = 1e-300


class ParametrizationMode(str, Enum):
    LOGISTIC_NORMALIZED = "logistic_normalized"
    LOGISTIC_RAW = "logistic_raw"
    SOFTMAX = "softmax"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            allowed = ", ".join(mode.value for mode in cls)
            raise ParametrizationError(f"unknown parametrization mode '{value}', expected one of {allowed}")

    @property
    def constants_exact(self):
        return self is not ParametrizationMode.LOGISTIC_RAW


def _check_bandwidth(n, bandwidth):
    if bandwidth is None:
        return
    if isinstance(bandwidth, bool) or int(bandwidth) != bandwidth:
        raise ParametrizationError(f"bandwidth must be an integer, got {bandwidth!r}")
    if bandwidth < 1 or bandwidth >= n:
        raise ParametrizationError(f"bandwidth must satisfy 1 <= w < N={n}, got {bandwidth}")


def skew_indices(n, bandwidth=None):
    """Row-major (row, col) index arrays of the parametrized strict upper triangle."""
    _check_bandwidth(n, bandwidth)
    rows, cols = np.triu_indices(n, k=1)
    if bandwidth is not None:
        inside = (cols - rows) <= bandwidth
        rows, cols = rows[inside], cols[inside]
    return rows, cols


def skew_length(n, bandwidth=None):
    return skew_indices(n, bandwidth)[0].size


@dataclass(frozen=True, eq=False)
class ParamVector:
    sigma: np.ndarray
    rho: np.ndarray

    def flatten(self):
        return np.concatenate([self.sigma, self.rho])

    @classmethod
    def from_flat(cls, z, n_sigma):
        z = np.asarray(z, dtype=float)
        return cls(sigma=z[:n_sigma].copy(), rho=z[n_sigma:].copy())

    @classmethod
    def zeros(cls, n, bandwidth=None):
        return cls(sigma=np.zeros(skew_length(n, bandwidth)), rho=np.zeros(n))


@dataclass(frozen=True, eq=False)
class SkewMatrix:
    """Skew-symmetric matrix stored as its parametrized upper-triangle entries."""

    n: int
    upper: np.ndarray
    bandwidth: Optional[int] = None

    def indices(self):
        return skew_indices(self.n, self.bandwidth)

    @property
    def matrix(self):
        rows, cols = self.indices()
        S = np.zeros((self.n, self.n))
        S[rows, cols] = self.upper
        S[cols, rows] = -self.upper
        return S

    def matmul(self, A):
        """S @ A without forming S densely in banded mode."""
        if self.bandwidth is None:
            return self.matrix @ A
        rows, cols = self.indices()
        S = sparse.csr_matrix(
            (np.concatenate([self.upper, -self.upper]),
             (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
            shape=(self.n, self.n),
        )
        return S @ A


@dataclass(frozen=True, eq=False)
class NormMatrix:
    p: np.ndarray
    interval: object
    constants_exact: bool

    @property
    def matrix(self):
        return np.diag(self.p)


def skew_from_params(sigma, n, bandwidth=None):
    sigma = np.asarray(sigma, dtype=float).reshape(-1)
    expected = skew_length(n, bandwidth)
    if sigma.size != expected:
        raise ParametrizationError(
            f"sigma has {sigma.size} entries but N={n}, bandwidth={bandwidth} needs {expected}"
        )
    return SkewMatrix(n=n, upper=sigma.copy(), bandwidth=bandwidth)


def params_from_skew(S, bandwidth=None, tol=1e-12):
    """Inverse of skew_from_params; accepts a SkewMatrix or a dense skew array."""
    if isinstance(S, SkewMatrix):
        return S.upper.copy()

    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ParametrizationError(f"expected a square matrix, got shape {S.shape}")
    defect = np.max(np.abs(S + S.T)) if S.size else 0.0
    if defect > tol:
        raise ParametrizationError(f"matrix is not skew-symmetric (max |S + S^T| = {defect:.3e})")

    rows, cols = skew_indices(S.shape[0], bandwidth)
    if bandwidth is not None:
        outside = np.abs(np.subtract.outer(np.arange(S.shape[0]), np.arange(S.shape[0]))) > bandwidth
        if np.any(np.abs(S[outside]) > tol):
            raise ParametrizationError(f"matrix has entries outside bandwidth {bandwidth}")
    return S[rows, cols].copy()


def _logistic(rho):
    return np.clip(expit(rho), LOGISTIC_FLOOR, 1.0)


def norm_from_params(rho, interval, mode=ParametrizationMode.LOGISTIC_NORMALIZED):
    mode = ParametrizationMode.parse(mode)
    rho = np.asarray(rho, dtype=float).reshape(-1)
    if not np.all(np.isfinite(rho)):
        raise ParametrizationError("rho must be finite")

    if mode is ParametrizationMode.LOGISTIC_RAW:
        p = _logistic(rho)
    elif mode is ParametrizationMode.LOGISTIC_NORMALIZED:
        s = _logistic(rho)
        p = interval.length * s / np.sum(s)
    else:
        s = np.maximum(softmax(rho), LOGISTIC_FLOOR)
        p = interval.length * s / np.sum(s)
    return NormMatrix(p=p, interval=interval, constants_exact=mode.constants_exact)


def norm_gradient(rho, interval, mode, d):
    """Chain rule: turn dF/dp (``d``) into dF/drho for the given mode."""
    mode = ParametrizationMode.parse(mode)
    rho = np.asarray(rho, dtype=float)

    if mode is ParametrizationMode.SOFTMAX:
        p = norm_from_params(rho, interval, mode).p
        return p * (d - np.dot(d, p) / interval.length)

    s = _logistic(rho)
    ds = s * (1.0 - s)
    if mode is ParametrizationMode.LOGISTIC_RAW:
        return d * ds

    total = np.sum(s)
    p = interval.length * s / total
    return (interval.length / total) * (d - np.dot(d, p) / interval.length) * ds


def assemble_x(S, P):
    """X = [S | diag(p)], shape N x 2N."""
    return np.hstack([S.matrix, np.diag(P.p)])


def params_from_norm(p, mode=ParametrizationMode.LOGISTIC_NORMALIZED):
    """A rho that maps back to ``p``; None when ``p`` is outside the range of the mode.

    The normalized modes only reproduce weights that sum to the interval length.
    """
    mode = ParametrizationMode.parse(mode)
    p = np.asarray(p, dtype=float).reshape(-1)
    if not np.all(p > 0):
        return None
    if mode is ParametrizationMode.LOGISTIC_RAW:
        return logit(p) if np.all(p < 1.0) else None
    if mode is ParametrizationMode.SOFTMAX:
        return np.log(p)
    # s in (0, 1/2]; the normalization removes the common factor
    return logit(0.5 * p / np.max(p))
