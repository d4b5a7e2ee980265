"""Function spaces, grids, Vandermonde matrices and discrete Sobolev orthonormalization.

The optimization system is built on the stacked matrix ``W = [V; -Vx]``.
Orthonormalizing the basis in the discrete Sobolev inner product

    <f, g> = sum_n f(x_n) g(x_n) + f'(x_n) g'(x_n)

makes ``W^T W = I`` so the least-squares problem is perfectly conditioned.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import legendre

from .errors import BasisError

logger = logging.getLogger(__name__)

GRID_KINDS = ("equidistant", "chebyshev_lobatto", "gauss_lobatto", "explicit")
SPACE_KINDS = ("monomial", "exponential", "gaussian_advection", "hermite_oscillator")

# Relative tolerance used to snap explicit end nodes onto the interval boundary
BOUNDARY_SNAP = 1e-12


@dataclass(frozen=True)
class Interval:
    x_left: float
    x_right: float

    def __post_init__(self):
        if not (np.isfinite(self.x_left) and np.isfinite(self.x_right)):
            raise BasisError(f"interval endpoints must be finite, got [{self.x_left}, {self.x_right}]")
        if not self.x_left < self.x_right:
            raise BasisError(f"interval requires x_left < x_right, got [{self.x_left}, {self.x_right}]")

    @property
    def length(self):
        return self.x_right - self.x_left

    def as_list(self):
        return [float(self.x_left), float(self.x_right)]


@dataclass(frozen=True, eq=False)
class Grid:
    """Strictly increasing nodes on an interval, both endpoints included."""

    interval: Interval
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float).reshape(-1)
        if nodes.size < 2:
            raise BasisError(f"a grid needs at least 2 nodes, got {nodes.size}")
        if not np.all(np.isfinite(nodes)):
            raise BasisError("grid nodes must be finite")
        if np.any(np.diff(nodes) <= 0):
            raise BasisError("grid nodes must be strictly increasing")
        if nodes[0] != self.interval.x_left or nodes[-1] != self.interval.x_right:
            raise BasisError(
                f"grid must start at {self.interval.x_left} and end at {self.interval.x_right}, "
                f"got {nodes[0]} and {nodes[-1]}"
            )
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def n(self):
        return self.nodes.size

    @property
    def h_min(self):
        return float(np.min(np.diff(self.nodes)))


@dataclass(frozen=True, eq=False)
class FunctionSpace:
    """Named basis f_1..f_K of C^1 functions with vectorized value and derivative evaluators."""

    name: str
    functions: tuple
    derivatives: tuple
    descriptor: Optional[dict] = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.functions) != len(self.derivatives):
            raise BasisError(
                f"space '{self.name}' has {len(self.functions)} functions but "
                f"{len(self.derivatives)} derivatives"
            )
        object.__setattr__(self, "functions", tuple(self.functions))
        object.__setattr__(self, "derivatives", tuple(self.derivatives))

    @property
    def dim(self):
        return len(self.functions)

    def eval(self, k, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.functions[k](x), dtype=float), x.shape).copy()

    def eval_deriv(self, k, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.derivatives[k](x), dtype=float), x.shape).copy()


@dataclass(frozen=True, eq=False)
class VandermondePair:
    V: np.ndarray
    Vx: np.ndarray

    def __post_init__(self):
        if self.V.shape != self.Vx.shape:
            raise BasisError(f"V has shape {self.V.shape} but Vx has shape {self.Vx.shape}")

    @property
    def n(self):
        return self.V.shape[0]

    @property
    def k(self):
        return self.V.shape[1]


@dataclass(frozen=True, eq=False)
class StackedBasisMatrix:
    """W = [V; -Vx], shape 2N x K."""

    W: np.ndarray

    @property
    def n(self):
        return self.W.shape[0] // 2

    @property
    def top(self):
        return self.W[: self.n]

    @property
    def bottom(self):
        return self.W[self.n :]

    def split(self):
        """Return (V, -Vx), the two halves as stored."""
        return self.top.copy(), self.bottom.copy()


def make_space(name, functions: Sequence[Callable], derivatives: Sequence[Callable], descriptor=None):
    """Wrap user-supplied closures (e.g. tabulated interpolants) as a FunctionSpace."""
    return FunctionSpace(name=name, functions=tuple(functions), derivatives=tuple(derivatives),
                         descriptor=descriptor)


def hermite_functions(x, n_max, normalized=False):
    """Values and derivatives of psi_n(x) = exp(-x^2/2) H_n(x) for n = 0..n_max.

    The recurrence runs on psi_n directly, psi_{n+1} = 2x psi_n - 2n psi_{n-1},
    so nothing overflows on |x| <= 10. ``normalized`` divides psi_n by its
    L2 norm sqrt(2^n n! sqrt(pi)) using the orthonormal recurrence.
    """
    x = np.asarray(x, dtype=float)
    psi = np.empty((n_max + 1,) + x.shape)
    if normalized:
        psi[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
        if n_max >= 1:
            psi[1] = np.sqrt(2.0) * x * psi[0]
        for n in range(1, n_max):
            psi[n + 1] = np.sqrt(2.0 / (n + 1)) * x * psi[n] - np.sqrt(n / (n + 1)) * psi[n - 1]
        lowering = np.sqrt(2.0 * np.arange(n_max + 1))
    else:
        psi[0] = np.exp(-0.5 * x * x)
        if n_max >= 1:
            psi[1] = 2.0 * x * psi[0]
        for n in range(1, n_max):
            psi[n + 1] = 2.0 * x * psi[n] - 2.0 * n * psi[n - 1]
        lowering = 2.0 * np.arange(n_max + 1)

    # H_n' = 2n H_{n-1}  =>  psi_n' = 2n psi_{n-1} - x psi_n (sqrt(2n) when normalized)
    dpsi = -x * psi
    for n in range(1, n_max + 1):
        dpsi[n] += lowering[n] * psi[n - 1]
    return psi, dpsi


def _monomial_space(degree):
    functions, derivatives = [], []
    for k in range(degree + 1):
        functions.append(lambda x, k=k: np.power(x, k))
        if k == 0:
            derivatives.append(lambda x: np.zeros_like(x))
        else:
            derivatives.append(lambda x, k=k: k * np.power(x, k - 1))
    return functions, derivatives


def _exponential_space():
    functions = [lambda x: np.ones_like(x), lambda x: x, np.exp]
    derivatives = [lambda x: np.zeros_like(x), lambda x: np.ones_like(x), np.exp]
    return functions, derivatives


def _gaussian_advection_space():
    def bump(shift):
        return lambda x: np.exp(-((shift + x) ** 2) / 9.0)

    def bump_deriv(shift):
        return lambda x: -2.0 * (shift + x) / 9.0 * np.exp(-((shift + x) ** 2) / 9.0)

    functions = [lambda x: x, bump(1.0), bump(0.6)]
    derivatives = [lambda x: np.ones_like(x), bump_deriv(1.0), bump_deriv(0.6)]
    return functions, derivatives


def _hermite_oscillator_space(n_max):
    functions = [lambda x: np.ones_like(x), lambda x: x]
    derivatives = [lambda x: np.zeros_like(x), lambda x: np.ones_like(x)]
    for n in range(n_max + 1):
        functions.append(lambda x, n=n: hermite_functions(x, n, normalized=True)[0][n])
        derivatives.append(lambda x, n=n: hermite_functions(x, n, normalized=True)[1][n])
    return functions, derivatives


def _require_int(descriptor, key, default=None, minimum=0):
    value = descriptor.get(key, default)
    if value is None:
        raise BasisError(f"space descriptor of kind '{descriptor['kind']}' requires '{key}'")
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise BasisError(f"space descriptor field '{key}' must be an integer, got {value!r}")
    if value < minimum:
        raise BasisError(f"space descriptor field '{key}' must be >= {minimum}, got {value}")
    return int(value)


def make_builtin_space(descriptor):
    """Build one of the built-in spaces from a descriptor such as ``{"kind": "monomial", "degree": 3}``."""
    if isinstance(descriptor, str):
        descriptor = {"kind": descriptor}
    if not isinstance(descriptor, dict) or "kind" not in descriptor:
        raise BasisError(f"space descriptor must be a mapping with a 'kind', got {descriptor!r}")

    kind = descriptor["kind"]
    if kind == "monomial":
        degree = _require_int(descriptor, "degree")
        functions, derivatives = _monomial_space(degree)
        name = f"monomial_d{degree}"
        canonical = {"kind": kind, "degree": degree}
    elif kind == "exponential":
        functions, derivatives = _exponential_space()
        name = "exponential"
        canonical = {"kind": kind}
    elif kind == "gaussian_advection":
        functions, derivatives = _gaussian_advection_space()
        name = "gaussian_advection"
        canonical = {"kind": kind}
    elif kind == "hermite_oscillator":
        n_max = _require_int(descriptor, "n_max", default=10)
        functions, derivatives = _hermite_oscillator_space(n_max)
        name = f"hermite_oscillator_n{n_max}"
        canonical = {"kind": kind, "n_max": n_max}
    else:
        raise BasisError(f"unknown space kind '{kind}', expected one of {', '.join(SPACE_KINDS)}")

    return FunctionSpace(name=name, functions=tuple(functions), derivatives=tuple(derivatives),
                         descriptor=canonical)


def gauss_lobatto_points(n):
    """Gauss-Lobatto nodes on [-1, 1]: the endpoints plus the roots of P'_{n-1}."""
    if n < 2:
        raise BasisError(f"Gauss-Lobatto rule needs n >= 2, got {n}")
    interior = legendre.Legendre.basis(n - 1).deriv().roots() if n > 2 else np.empty(0)
    return np.concatenate(([-1.0], np.sort(np.real(interior)), [1.0]))


def make_grid(interval, kind="equidistant", n=None, nodes=None):
    """Build a Grid of the requested kind; ``explicit`` takes a node list, all others take ``n``."""
    if kind not in GRID_KINDS:
        raise BasisError(f"unknown grid kind '{kind}', expected one of {', '.join(GRID_KINDS)}")

    if kind == "explicit":
        if nodes is None:
            raise BasisError("explicit grid requires a node list")
        values = np.array(nodes, dtype=float).reshape(-1)
        scale = max(1.0, abs(interval.x_left), abs(interval.x_right))
        for index, target in ((0, interval.x_left), (-1, interval.x_right)):
            if values.size and abs(values[index] - target) <= BOUNDARY_SNAP * scale:
                values[index] = target
        return Grid(interval=interval, nodes=values)

    if n is None or isinstance(n, bool) or int(n) != n:
        raise BasisError(f"grid kind '{kind}' requires an integer node count, got {n!r}")
    n = int(n)
    if n < 2:
        raise BasisError(f"a grid needs at least 2 nodes, got {n}")

    mid = 0.5 * (interval.x_left + interval.x_right)
    half = 0.5 * interval.length
    if kind == "equidistant":
        values = np.linspace(interval.x_left, interval.x_right, n)
    elif kind == "chebyshev_lobatto":
        values = mid - half * np.cos(np.pi * np.arange(n) / (n - 1))
    else:
        values = mid + half * gauss_lobatto_points(n)

    values[0], values[-1] = interval.x_left, interval.x_right
    return Grid(interval=interval, nodes=values)


def evaluate_vandermonde(space, grid):
    """V[n, k] = f_k(x_n), Vx[n, k] = f_k'(x_n)."""
    x = grid.nodes
    V = np.empty((grid.n, space.dim))
    Vx = np.empty((grid.n, space.dim))
    for k in range(space.dim):
        V[:, k] = space.eval(k, x)
        Vx[:, k] = space.eval_deriv(k, x)

    bad = ~(np.isfinite(V) & np.isfinite(Vx))
    if np.any(bad):
        rows, cols = np.nonzero(bad)
        raise BasisError(
            f"space '{space.name}' is not finite at node x={x[rows[0]]} (basis index {cols[0]})"
        )
    return VandermondePair(V=V, Vx=Vx)


def stack_w(pair):
    return StackedBasisMatrix(W=np.vstack([pair.V, -pair.Vx]))


def sobolev_gram(pair):
    """Gram matrix V^T V + Vx^T Vx of the discrete Sobolev inner product."""
    return pair.V.T @ pair.V + pair.Vx.T @ pair.Vx


def orthonormalize(pair, rank_tol=1e-10, variant="modified"):
    """Gram-Schmidt in the discrete Sobolev inner product.

    Columns whose norm after projection falls below ``rank_tol`` times their
    norm before projection are dropped. Returns the orthonormal pair and the
    number of retained columns.

    ``variant="modified"`` runs modified Gram-Schmidt with one
    re-orthogonalization pass; ``"classical"`` projects every column against
    the original input once.
    """
    if not rank_tol > 0:
        raise BasisError(f"rank_tol must be positive, got {rank_tol}")
    if variant not in ("modified", "classical"):
        raise BasisError(f"unknown Gram-Schmidt variant '{variant}'")

    n = pair.n
    # Sobolev product of two functions == Euclidean product of the stacked columns
    stacked = np.vstack([pair.V, pair.Vx])
    retained, dropped = [], []

    for k in range(stacked.shape[1]):
        column = stacked[:, k].copy()
        reference = np.linalg.norm(column)
        if variant == "modified":
            for _ in range(2):
                for q in retained:
                    column -= (q @ column) * q
        elif retained:
            basis = np.column_stack(retained)
            column -= basis @ (basis.T @ stacked[:, k])

        norm = np.linalg.norm(column)
        if reference == 0.0 or norm < rank_tol * reference:
            dropped.append(k)
            continue
        retained.append(column / norm)

    if not retained:
        raise BasisError("all basis columns are numerically dependent; nothing to orthonormalize")
    if dropped:
        logger.warning(f"Dropped {len(dropped)} dependent basis column(s): {dropped}")

    Z = np.column_stack(retained)
    return VandermondePair(V=Z[:n].copy(), Vx=Z[n:].copy()), len(retained)
