"""Operator files, JSON reports and CSV tables.

Floats are written with Python's shortest round-trip representation, so a
write followed by a read reproduces every value bit for bit.
"""
import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .basis import Interval, make_grid
from .errors import BasisError, ConstructionError, OperatorFileError
from .operator_optimizer import FsbpOperator
from .parametrize import ParametrizationMode

SCHEMA_VERSION = "1.0"
TOOL_VERSION = "1.0.0"

REQUIRED_KEYS = ("schema_version", "space", "grid", "p", "Q", "metadata")


@dataclass
class OperatorFile:
    space: dict
    interval: list
    nodes: list
    p: list
    Q: list
    metadata: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    @classmethod
    def from_operator(cls, op, space_descriptor, **metadata):
        meta = {"tool_version": TOOL_VERSION, "space_name": op.space_name,
                "constants_exact": bool(op.constants_exact)}
        meta.update(metadata)
        return cls(
            space=dict(space_descriptor),
            interval=op.grid.interval.as_list(),
            nodes=[float(x) for x in op.grid.nodes],
            p=[float(v) for v in op.p],
            Q=[[float(v) for v in row] for row in op.Q],
            metadata=meta,
        )

    def to_operator(self):
        try:
            grid = make_grid(Interval(*self.interval), "explicit", nodes=self.nodes)
            mode = self.metadata.get("mode", ParametrizationMode.LOGISTIC_NORMALIZED.value)
            constants_exact = self.metadata.get("constants_exact", ParametrizationMode.parse(mode).constants_exact)
            return FsbpOperator(grid=grid, p=self.p, Q=self.Q,
                                space_name=self.metadata.get("space_name", self.space.get("kind", "")),
                                constants_exact=bool(constants_exact))
        except (BasisError, ConstructionError) as e:
            raise OperatorFileError(f"operator file is inconsistent: {str(e)}")

    def as_dict(self):
        return {
            "schema_version": self.schema_version,
            "space": self.space,
            "grid": {"interval": self.interval, "nodes": self.nodes},
            "p": self.p,
            "Q": self.Q,
            "metadata": self.metadata,
        }


def _check_document(document):
    if not isinstance(document, dict):
        raise OperatorFileError("operator file must contain a JSON object")
    missing = [key for key in REQUIRED_KEYS if key not in document]
    if missing:
        raise OperatorFileError(f"operator file is missing {', '.join(missing)}")
    if document["schema_version"] != SCHEMA_VERSION:
        raise OperatorFileError(
            f"unsupported schema_version {document['schema_version']!r}, expected {SCHEMA_VERSION!r}"
        )
    grid = document["grid"]
    if not isinstance(grid, dict) or "interval" not in grid or "nodes" not in grid:
        raise OperatorFileError("grid must hold 'interval' and 'nodes'")

    p = np.asarray(document["p"], dtype=float)
    Q = np.asarray(document["Q"], dtype=float)
    n = len(grid["nodes"])
    if p.shape != (n,) or Q.shape != (n, n):
        raise OperatorFileError(f"p has shape {p.shape} and Q has shape {Q.shape}, grid has {n} nodes")
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(Q))):
        raise OperatorFileError("operator entries must be finite")
    bad = np.flatnonzero(p <= 0)
    if bad.size:
        raise OperatorFileError(
            f"norm matrix has non-positive weights at nodes {bad.tolist()}: {p[bad].tolist()}"
        )


class OperatorStore:
    """Reads and writes operator files, reports and CSV tables."""

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    @staticmethod
    def _prepare(path):
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)

    def write_operator(self, path, operator_file):
        try:
            self._prepare(path)
            with open(path, "w", encoding="utf-8") as handle:
                json.dump(operator_file.as_dict(), handle, indent=2)
            self.logger.info(f"Wrote operator with {len(operator_file.p)} nodes to {path}")
        except OSError as e:
            self.logger.error(f"Failed to write operator file {path}: {str(e)}")
            raise OperatorFileError(f"cannot write {path}: {e}")

    def read_operator(self, path):
        try:
            with open(path, "r", encoding="utf-8") as handle:
                document = json.load(handle)
        except OSError as e:
            raise OperatorFileError(f"cannot read {path}: {e}")
        except json.JSONDecodeError as e:
            raise OperatorFileError(f"{path} is not a valid operator file: {e}")

        _check_document(document)
        self.logger.info(f"Read operator file {path}")
        return OperatorFile(
            space=document["space"],
            interval=list(document["grid"]["interval"]),
            nodes=list(document["grid"]["nodes"]),
            p=list(document["p"]),
            Q=[list(row) for row in document["Q"]],
            metadata=dict(document["metadata"]),
            schema_version=document["schema_version"],
        )

    def write_report(self, path, report):
        try:
            self._prepare(path)
            with open(path, "w", encoding="utf-8") as handle:
                json.dump(report, handle, indent=2, default=_jsonable)
            self.logger.info(f"Wrote report to {path}")
        except OSError as e:
            self.logger.error(f"Failed to write report {path}: {str(e)}")
            raise OperatorFileError(f"cannot write {path}: {e}")

    def write_table(self, path, frame: pd.DataFrame):
        """CSV with header row, no index column."""
        try:
            self._prepare(path)
            frame.to_csv(path, index=False)
            self.logger.info(f"Wrote {len(frame)} rows ({', '.join(frame.columns)}) to {path}")
        except OSError as e:
            self.logger.error(f"Failed to write table {path}: {str(e)}")
            raise OperatorFileError(f"cannot write {path}: {e}")


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")
