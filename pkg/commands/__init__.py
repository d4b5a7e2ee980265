"""Subcommand handlers; each exposes ``main(config, args, store) -> exit code``."""
import os

from fsbp.basis import Interval, make_grid

EXIT_OK = 0
EXIT_FAILURE = 1


def build_grid(grid_config):
    interval = Interval(*grid_config.interval)
    return make_grid(interval, grid_config.kind, n=grid_config.n, nodes=grid_config.nodes)


def sibling_path(path, suffix):
    """``out/operator.json`` -> ``out/operator_report.json``."""
    root, _ = os.path.splitext(path)
    return f"{root}{suffix}"
