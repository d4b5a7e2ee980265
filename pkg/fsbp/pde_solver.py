"""PDE harness: periodic advection convergence and the Schrodinger equation.

Advection u_t + u_x = 0 on [-1, 1] is discretized by tiling the domain with
identical FSBP blocks coupled through full-upwind SATs. The Schrodinger
equation i psi_t = -psi_xx + x^2 psi is split into real and imaginary parts
u1, u2 and discretized with L = V - D D + P^{-1} B D.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import pandas as pd

from .basis import Interval, make_builtin_space, make_grid
from .errors import IntegrationError
from .operator_optimizer import OperatorOptimizer
from .operator_verifier import OperatorVerifier

ADVECTION_DOMAIN = Interval(-1.0, 1.0)
# Final time of the reference advection experiment
REFERENCE_END_TIME = 10.0
SCHRODINGER_DOMAIN = Interval(-10.0, 10.0)
SCHRODINGER_CENTER = 2.5


def sine_wave(x):
    return np.sin(np.pi * x)


def gaussian_wave(x):
    """Unnormalized wave packet e^{-(x - 2.5)^2} at rest."""
    return np.exp(-(x - SCHRODINGER_CENTER) ** 2)


def harmonic_potential(x):
    return x ** 2


@dataclass(eq=False)
class AdvectionProblem:
    blocks: int
    operator: object
    end_time: float = 1.0
    initial: Callable = sine_wave
    cfl: float = 0.2
    domain: Interval = ADVECTION_DOMAIN

    def __post_init__(self):
        if self.blocks < 1:
            raise IntegrationError(f"blocks must be >= 1, got {self.blocks}")
        if not self.cfl > 0:
            raise IntegrationError(f"cfl must be positive, got {self.cfl}")
        ref = self.operator.grid.interval.length
        self.block_length = self.domain.length / self.blocks
        self.scale = self.block_length / ref
        self.D = self.operator.D / self.scale
        self.p = self.operator.p * self.scale
        offsets = self.domain.x_left + self.block_length * np.arange(self.blocks)
        local = (self.operator.grid.nodes - self.operator.grid.interval.x_left) * self.scale
        self.x = offsets[:, None] + local[None, :]

    @property
    def n_total(self):
        return self.blocks * self.operator.n

    @property
    def h(self):
        """Mean node spacing inside one block."""
        return self.block_length / (self.operator.n - 1)

    def exact(self, t):
        length = self.domain.length
        shifted = np.mod(self.x - t - self.domain.x_left, length) + self.domain.x_left
        return self.initial(shifted)

    def energy(self, state):
        U = np.asarray(state).reshape(self.blocks, -1)
        return float(np.sum(U * U * self.p[None, :]))

    def error_norm(self, state, t):
        """Error in the global norm induced by the block-diagonal P."""
        return float(np.sqrt(self.energy(np.asarray(state).reshape(self.x.shape) - self.exact(t))))


@dataclass(eq=False)
class SchrodingerProblem:
    operator: object
    potential: Callable = harmonic_potential
    end_time: float = np.pi / 2
    initial_wave: Callable = gaussian_wave
    dt: Optional[float] = None
    cfl: float = 0.1

    def __post_init__(self):
        self.x = self.operator.grid.nodes
        D = self.operator.D
        boundary = np.zeros_like(D)
        boundary[0] = -D[0] / self.operator.p[0]
        boundary[-1] = D[-1] / self.operator.p[-1]
        self.hamiltonian = np.diag(self.potential(self.x)) - D @ D + boundary

    def probability(self, state):
        u1, u2 = state
        return float(np.dot(self.operator.p, u1 * u1 + u2 * u2))

    def initial_state(self):
        psi = np.asarray(self.initial_wave(self.x), dtype=complex)
        return np.vstack([psi.real, psi.imag])


@dataclass
class ConvergenceTable:
    rows: pd.DataFrame
    fitted_order: float
    notes: list = field(default_factory=list)

    def as_frame(self):
        return self.rows.copy()


@dataclass
class SchrodingerResult:
    series: pd.DataFrame
    u1: np.ndarray
    u2: np.ndarray
    x: np.ndarray
    dt: float

    @property
    def snapshot(self):
        return pd.DataFrame({"x": self.x, "u1": self.u1, "u2": self.u2,
                             "psi_sq": self.u1 ** 2 + self.u2 ** 2})

    @property
    def relative_drift(self):
        """max_t |norm(t) - norm(0)| / norm(0) over the recorded series."""
        norms = self.series["probability_norm"].to_numpy()
        return float(np.max(np.abs(norms - norms[0])) / norms[0])


def advection_rhs(state, problem):
    """-D u per block plus the upwind SAT -(u_b(x_L) - u_{b-1}(x_R)) / p_0 on the first node."""
    U = np.asarray(state, dtype=float).reshape(problem.blocks, -1)
    rhs = -U @ problem.D.T
    rhs[:, 0] -= (U[:, 0] - np.roll(U[:, -1], 1)) / problem.p[0]
    return rhs.reshape(np.shape(state))


def schrodinger_rhs(state, problem):
    u1, u2 = state
    L = problem.hamiltonian
    return np.vstack([L @ u2, -(L @ u1)])


def rk4_integrate(rhs, state0, dt, end_time, callback=None):
    """Classical RK4 for u' = rhs(u) up to ``end_time``; the last step is shortened to land on it.

    ``callback(t, state, step)`` is called after every step.
    """
    if not dt > 0:
        raise IntegrationError(f"time step must be positive, got {dt}")
    if end_time < 0:
        raise IntegrationError(f"end_time must be non-negative, got {end_time}")

    u = np.array(state0, dtype=float)
    t = 0.0
    step = 0
    while t < end_time:
        h = min(dt, end_time - t)
        if end_time - (t + h) < 1e-14 * max(1.0, end_time):
            h = end_time - t
        k1 = rhs(u)
        k2 = rhs(u + 0.5 * h * k1)
        k3 = rhs(u + 0.5 * h * k2)
        k4 = rhs(u + h * k3)
        u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = end_time if h == end_time - t else t + h
        step += 1
        if not np.all(np.isfinite(u)):
            raise IntegrationError(f"non-finite state at t={t:.6g} after {step} steps (dt={dt:.3e})")
        if callback is not None:
            callback(t, u, step)
    return u


def fitted_order(h, errors):
    """Least-squares slope of log(error) against log(h)."""
    floor = np.finfo(float).tiny
    return float(np.polyfit(np.log(h), np.log(np.maximum(errors, floor)), 1)[0])


class AdvectionExperiment:
    """Convergence study: one reference operator tiled over more and more blocks."""

    def __init__(self, optimizer=None):
        self.optimizer = optimizer or OperatorOptimizer()
        self.verifier = OperatorVerifier()
        self.logger = logging.getLogger(__name__)

    def time_step(self, problem):
        norm = self.verifier.spectral_norm(problem.operator.D)
        return problem.cfl * problem.operator.grid.h_min * problem.scale / norm

    def solve(self, problem):
        """Integrate one problem; returns (final state, P-norm error)."""
        dt = self.time_step(problem)
        u0 = problem.initial(problem.x)
        final = rk4_integrate(lambda u: advection_rhs(u, problem), u0, dt, problem.end_time)
        error = problem.error_norm(final, problem.end_time)
        self.logger.info(f"Advection blocks={problem.blocks}, N={problem.n_total}, dt={dt:.3e}: error={error:.3e}")
        return final, error

    def advection_convergence(self, space, grid, resolutions, end_time=1.0, cfl=0.2,
                              initial=sine_wave, mode="logistic_normalized", operator=None):
        """Error table for the block counts in ``resolutions``.

        The reference operator is constructed once on ``grid`` unless ``operator`` is given.
        """
        resolutions = sorted(int(b) for b in resolutions)
        if len(resolutions) < 3:
            raise IntegrationError(f"a convergence study needs at least 3 resolutions, got {len(resolutions)}")
        if operator is None:
            operator, _ = self.optimizer.construct_operator(space, grid, mode)

        records = []
        for blocks in resolutions:
            problem = AdvectionProblem(blocks=blocks, operator=operator, end_time=end_time,
                                       initial=initial, cfl=cfl)
            _, error = self.solve(problem)
            records.append({"N": problem.n_total, "h": problem.h, "error": error})

        rows = pd.DataFrame.from_records(records, columns=["N", "h", "error"])
        logs = np.log(np.maximum(rows["error"].to_numpy(), np.finfo(float).tiny))
        local = np.full(len(rows), np.nan)
        local[1:] = np.diff(logs) / np.diff(np.log(rows["h"].to_numpy()))
        rows["order"] = local

        notes = []
        if np.any(rows["error"] < 1e-13):
            notes.append("errors at round-off level; fitted order is not meaningful")
        if end_time < REFERENCE_END_TIME:
            notes.append(f"end_time reduced from t={REFERENCE_END_TIME:g} to t={end_time:g}")
        order = fitted_order(rows["h"].to_numpy(), rows["error"].to_numpy())
        self.logger.info(f"Fitted convergence order {order:.2f} for space '{operator.space_name}'")
        return ConvergenceTable(rows=rows, fitted_order=order, notes=notes)


class SchrodingerExperiment:
    """Harmonic-oscillator run on [-10, 10] tracking the discrete probability u1^T P u1 + u2^T P u2."""

    SPACES = ("hermite", "polynomial")

    def __init__(self, optimizer=None):
        self.optimizer = optimizer or OperatorOptimizer()
        self.verifier = OperatorVerifier()
        self.logger = logging.getLogger(__name__)

    def build_operator(self, space_choice, n, mode="logistic_normalized"):
        if space_choice == "hermite":
            space = make_builtin_space({"kind": "hermite_oscillator", "n_max": 10})
        elif space_choice == "polynomial":
            space = make_builtin_space({"kind": "monomial", "degree": 4})
        else:
            raise IntegrationError(f"unknown Schrodinger space '{space_choice}', expected one of {self.SPACES}")
        grid = make_grid(SCHRODINGER_DOMAIN, "equidistant", n=n)
        operator, _ = self.optimizer.construct_operator(space, grid, mode)
        return operator

    def time_step(self, problem):
        return problem.cfl / self.verifier.spectral_norm(problem.hamiltonian)

    def schrodinger_run(self, space_choice="hermite", n=100, end_time=np.pi / 2, dt=None,
                        snapshots=200, operator=None, initial_wave=gaussian_wave, cfl=0.1):
        if n < 10:
            raise IntegrationError(f"Schrodinger runs need N >= 10, got {n}")
        if dt is not None and not dt > 0:
            raise IntegrationError(f"time step must be positive, got {dt}")
        if operator is None:
            operator = self.build_operator(space_choice, n)

        problem = SchrodingerProblem(operator=operator, end_time=end_time, initial_wave=initial_wave,
                                     dt=dt, cfl=cfl)
        step_size = dt if dt is not None else self.time_step(problem)
        total_steps = max(1, int(np.ceil(end_time / step_size)))
        every = max(1, total_steps // max(1, snapshots))
        state0 = problem.initial_state()

        times = [0.0]
        norms = [problem.probability(state0)]

        def record(t, state, step):
            if step % every == 0 or t >= end_time:
                times.append(t)
                norms.append(problem.probability(state))

        self.logger.info(f"Schrodinger run: space={space_choice}, N={operator.n}, dt={step_size:.3e}, "
                         f"{total_steps} steps to t={end_time:.4g}")
        final = rk4_integrate(lambda u: schrodinger_rhs(u, problem), state0, step_size, end_time, record)
        series = pd.DataFrame({"t": times, "probability_norm": norms}).drop_duplicates("t", keep="last")
        result = SchrodingerResult(series=series.reset_index(drop=True), u1=final[0], u2=final[1],
                                   x=problem.x, dt=step_size)
        self.logger.info(f"Probability drift {result.relative_drift:.3e}")
        return result
