"""JSON run configuration.

A document maps subcommand names to payloads::

    {"construct": {"space": {"kind": "monomial", "degree": 3},
                   "grid": {"kind": "equidistant", "n": 10, "interval": [-1, 1]}}}

Every payload is validated strictly: unknown keys, wrong types and violated
constraints raise ConfigError carrying the dotted path of the field.
"""
import json
import logging
import math
import os
from dataclasses import dataclass, field, replace
from typing import List, Optional

from dotenv import load_dotenv

from .basis import GRID_KINDS, SPACE_KINDS
from .errors import ConfigError
from .lbfgs import OptimizerOptions
from .parametrize import ParametrizationMode

logger = logging.getLogger(__name__)

SUBCOMMANDS = ("construct", "verify", "convergence", "schrodinger", "fixtures")
SEED_ENV = "FSBP_SEED"


@dataclass(frozen=True)
class GridConfig:
    kind: str = "equidistant"
    interval: tuple = (-1.0, 1.0)
    n: Optional[int] = None
    nodes: Optional[tuple] = None

    @property
    def size(self):
        return len(self.nodes) if self.nodes is not None else self.n


@dataclass(frozen=True)
class ConstructConfig:
    space: dict
    grid: GridConfig
    mode: str = ParametrizationMode.LOGISTIC_NORMALIZED.value
    bandwidth: Optional[int] = None
    optimizer: OptimizerOptions = field(default_factory=OptimizerOptions)
    output: str = "operator.json"
    report: Optional[str] = None


@dataclass(frozen=True)
class VerifyConfig:
    space: dict
    operator: Optional[str] = None
    tol: float = 1e-10
    output: Optional[str] = None


@dataclass(frozen=True)
class ConvergenceConfig:
    space: dict
    grid: GridConfig
    blocks: tuple = (4, 8, 16, 32)
    end_time: float = 1.0
    cfl: float = 0.2
    mode: str = ParametrizationMode.LOGISTIC_NORMALIZED.value
    optimizer: OptimizerOptions = field(default_factory=OptimizerOptions)
    output: str = "convergence.csv"


@dataclass(frozen=True)
class SchrodingerConfig:
    space: str = "hermite"
    n: int = 100
    end_time: float = math.pi / 2
    dt: Optional[float] = None
    cfl: float = 0.1
    snapshots: int = 200
    optimizer: OptimizerOptions = field(default_factory=OptimizerOptions)
    output: str = "schrodinger.csv"
    snapshot_output: str = "schrodinger_snapshot.csv"


@dataclass(frozen=True)
class FixturesConfig:
    output: Optional[str] = None


@dataclass(frozen=True)
class RunConfig:
    construct: Optional[ConstructConfig] = None
    verify: Optional[VerifyConfig] = None
    convergence: Optional[ConvergenceConfig] = None
    schrodinger: Optional[SchrodingerConfig] = None
    fixtures: Optional[FixturesConfig] = None

    def section(self, name):
        value = getattr(self, name)
        if value is None:
            raise ConfigError(name, "section missing from configuration")
        return value

    def with_seed(self, seed):
        """Copy with every optimizer seed replaced."""
        updates = {}
        for name in ("construct", "convergence", "schrodinger"):
            section = getattr(self, name)
            if section is not None:
                updates[name] = replace(section, optimizer=replace(section.optimizer, rng_seed=seed))
        return replace(self, **updates)


class _Reader:
    """Pops typed fields out of one mapping and complains about leftovers."""

    def __init__(self, payload, path):
        if not isinstance(payload, dict):
            raise ConfigError(path, f"expected an object, got {type(payload).__name__}")
        self.payload = dict(payload)
        self.path = path

    def where(self, key):
        return f"{self.path}.{key}" if self.path else key

    def take(self, key, kind, default=None, required=False):
        if key not in self.payload:
            if required:
                raise ConfigError(self.where(key), "required field missing")
            return default
        value = self.payload.pop(key)
        if value is None:
            return default
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if isinstance(value, bool) and kind is not bool or not isinstance(value, kind):
            raise ConfigError(self.where(key), f"expected {kind.__name__}, got {type(value).__name__}")
        return value

    def finish(self):
        if self.payload:
            raise ConfigError(self.where(sorted(self.payload)[0]), "unknown key")


def _positive(value, path, strict=True):
    if value is None:
        return value
    if (strict and not value > 0) or (not strict and value < 0):
        raise ConfigError(path, f"must be {'positive' if strict else 'non-negative'}, got {value}")
    return value


def _parse_space(payload, path):
    reader = _Reader(payload, path)
    kind = reader.take("kind", str, required=True)
    if kind not in SPACE_KINDS:
        raise ConfigError(reader.where("kind"), f"unknown space kind '{kind}', expected one of {', '.join(SPACE_KINDS)}")
    descriptor = {"kind": kind}
    if kind == "monomial":
        degree = reader.take("degree", int, required=True)
        if degree < 0:
            raise ConfigError(reader.where("degree"), f"must be non-negative, got {degree}")
        descriptor["degree"] = degree
    elif kind == "hermite_oscillator":
        n_max = reader.take("n_max", int, default=10)
        if n_max < 0:
            raise ConfigError(reader.where("n_max"), f"must be non-negative, got {n_max}")
        descriptor["n_max"] = n_max
    reader.finish()
    return descriptor


def _parse_interval(value, path):
    if (not isinstance(value, list) or len(value) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise ConfigError(path, f"expected [x_left, x_right], got {value!r}")
    left, right = float(value[0]), float(value[1])
    if not (math.isfinite(left) and math.isfinite(right) and left < right):
        raise ConfigError(path, f"requires finite x_left < x_right, got {value!r}")
    return left, right


def _parse_grid(payload, path, default_interval=(-1.0, 1.0)):
    reader = _Reader(payload, path)
    kind = reader.take("kind", str, default="equidistant")
    if kind not in GRID_KINDS:
        raise ConfigError(reader.where("kind"), f"unknown grid kind '{kind}', expected one of {', '.join(GRID_KINDS)}")
    interval = reader.take("interval", list, default=list(default_interval))
    interval = _parse_interval(interval, reader.where("interval"))
    n = reader.take("n", int)
    nodes = reader.take("nodes", list)
    reader.finish()

    if kind == "explicit":
        if nodes is None:
            raise ConfigError(reader.where("nodes"), "explicit grid requires a node list")
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in nodes):
            raise ConfigError(reader.where("nodes"), "nodes must be numbers")
        if len(nodes) < 2:
            raise ConfigError(reader.where("nodes"), f"a grid needs at least 2 nodes, got {len(nodes)}")
        return GridConfig(kind=kind, interval=interval, nodes=tuple(float(v) for v in nodes))
    if n is None:
        raise ConfigError(reader.where("n"), f"grid kind '{kind}' requires a node count")
    if n < 2:
        raise ConfigError(reader.where("n"), f"a grid needs at least 2 nodes, got {n}")
    return GridConfig(kind=kind, interval=interval, n=n)


def _parse_mode(reader):
    mode = reader.take("mode", str, default=ParametrizationMode.LOGISTIC_NORMALIZED.value)
    allowed = [m.value for m in ParametrizationMode]
    if mode not in allowed:
        raise ConfigError(reader.where("mode"), f"unknown mode '{mode}', expected one of {', '.join(allowed)}")
    return mode


def _parse_optimizer(payload, path):
    reader = _Reader(payload or {}, path)
    defaults = OptimizerOptions()
    values = {
        "memory": reader.take("memory", int, default=defaults.memory),
        "max_iters": reader.take("max_iters", int, default=defaults.max_iters),
        "objective_tol": reader.take("objective_tol", float, default=defaults.objective_tol),
        "grad_tol": reader.take("grad_tol", float, default=defaults.grad_tol),
        "max_restarts": reader.take("max_restarts", int, default=defaults.max_restarts),
        "rng_seed": reader.take("seed", int, default=defaults.rng_seed),
        "init_scale": reader.take("init_scale", float, default=defaults.init_scale),
        "rank_tol": reader.take("rank_tol", float, default=defaults.rank_tol),
        "polish_steps": reader.take("polish_steps", int, default=defaults.polish_steps),
    }
    reader.finish()
    try:
        return OptimizerOptions(**values)
    except ValueError as e:
        raise ConfigError(path, str(e))


def _parse_construct(payload, path):
    reader = _Reader(payload, path)
    space = _parse_space(reader.take("space", dict, required=True), reader.where("space"))
    grid = _parse_grid(reader.take("grid", dict, required=True), reader.where("grid"))
    mode = _parse_mode(reader)
    bandwidth = reader.take("bandwidth", int)
    if bandwidth is not None and not 1 <= bandwidth < grid.size:
        raise ConfigError(reader.where("bandwidth"), f"must satisfy 1 <= w < N={grid.size}, got {bandwidth}")
    optimizer = _parse_optimizer(reader.take("optimizer", dict), reader.where("optimizer"))
    output = reader.take("output", str, default="operator.json")
    report = reader.take("report", str)
    reader.finish()
    return ConstructConfig(space=space, grid=grid, mode=mode, bandwidth=bandwidth, optimizer=optimizer,
                           output=output, report=report)


def _parse_verify(payload, path):
    reader = _Reader(payload, path)
    space = _parse_space(reader.take("space", dict, required=True), reader.where("space"))
    operator = reader.take("operator", str)
    tol = _positive(reader.take("tol", float, default=1e-10), reader.where("tol"))
    output = reader.take("output", str)
    reader.finish()
    return VerifyConfig(space=space, operator=operator, tol=tol, output=output)


def _parse_convergence(payload, path):
    reader = _Reader(payload, path)
    space = _parse_space(reader.take("space", dict, required=True), reader.where("space"))
    grid = _parse_grid(reader.take("grid", dict, required=True), reader.where("grid"))
    blocks = reader.take("blocks", list, default=[4, 8, 16, 32])
    if not all(isinstance(b, int) and not isinstance(b, bool) and b >= 1 for b in blocks):
        raise ConfigError(reader.where("blocks"), f"block counts must be positive integers, got {blocks!r}")
    if len(set(blocks)) < 3:
        raise ConfigError(reader.where("blocks"), f"needs at least 3 distinct resolutions, got {blocks!r}")
    end_time = _positive(reader.take("end_time", float, default=1.0), reader.where("end_time"))
    cfl = _positive(reader.take("cfl", float, default=0.2), reader.where("cfl"))
    mode = _parse_mode(reader)
    optimizer = _parse_optimizer(reader.take("optimizer", dict), reader.where("optimizer"))
    output = reader.take("output", str, default="convergence.csv")
    reader.finish()
    return ConvergenceConfig(space=space, grid=grid, blocks=tuple(sorted(set(blocks))), end_time=end_time,
                             cfl=cfl, mode=mode, optimizer=optimizer, output=output)


def _parse_schrodinger(payload, path):
    reader = _Reader(payload, path)
    space = reader.take("space", str, default="hermite")
    if space not in ("hermite", "polynomial"):
        raise ConfigError(reader.where("space"), f"expected 'hermite' or 'polynomial', got '{space}'")
    n = reader.take("n", int, default=100)
    if n < 10:
        raise ConfigError(reader.where("n"), f"must be >= 10, got {n}")
    end_time = _positive(reader.take("end_time", float, default=math.pi / 2), reader.where("end_time"), strict=False)
    dt = _positive(reader.take("dt", float), reader.where("dt"))
    cfl = _positive(reader.take("cfl", float, default=0.1), reader.where("cfl"))
    snapshots = _positive(reader.take("snapshots", int, default=200), reader.where("snapshots"))
    optimizer = _parse_optimizer(reader.take("optimizer", dict), reader.where("optimizer"))
    output = reader.take("output", str, default="schrodinger.csv")
    snapshot_output = reader.take("snapshot_output", str, default="schrodinger_snapshot.csv")
    reader.finish()
    return SchrodingerConfig(space=space, n=n, end_time=end_time, dt=dt, cfl=cfl, snapshots=snapshots,
                             optimizer=optimizer, output=output, snapshot_output=snapshot_output)


def _parse_fixtures(payload, path):
    reader = _Reader(payload, path)
    output = reader.take("output", str)
    reader.finish()
    return FixturesConfig(output=output)


_SECTION_PARSERS = {
    "construct": _parse_construct,
    "verify": _parse_verify,
    "convergence": _parse_convergence,
    "schrodinger": _parse_schrodinger,
    "fixtures": _parse_fixtures,
}


def parse_config(text):
    """Parse a JSON document (string or already-decoded mapping) into a validated RunConfig."""
    if isinstance(text, (str, bytes)):
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError("", f"malformed JSON: {e}")
    else:
        document = text

    reader = _Reader(document, "")
    sections = {}
    for name in SUBCOMMANDS:
        payload = reader.take(name, dict)
        if payload is not None:
            sections[name] = _SECTION_PARSERS[name](payload, name)
    reader.finish()
    return RunConfig(**sections)


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as e:
        raise ConfigError("", f"cannot read configuration file {path}: {e}")
    logger.info(f"Loaded configuration from {path}")
    return parse_config(text)


def load_environment():
    """Load a .env file if present and return the FSBP_SEED override (or None)."""
    load_dotenv()
    raw = os.getenv(SEED_ENV)
    if raw is None or raw == "":
        return None
    try:
        seed = int(raw)
    except ValueError:
        raise ConfigError(SEED_ENV, f"expected a non-negative integer, got '{raw}'")
    if seed < 0:
        raise ConfigError(SEED_ENV, f"expected a non-negative integer, got '{raw}'")
    logger.info(f"{SEED_ENV}={seed} overrides configured seeds")
    return seed
