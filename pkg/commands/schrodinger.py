import logging

from fsbp.config import SchrodingerConfig
from fsbp.operator_optimizer import OperatorOptimizer
from fsbp.pde_solver import SchrodingerExperiment

from . import EXIT_OK

logger = logging.getLogger(__name__)


def main(config, args, store):
    section = config.schrodinger or SchrodingerConfig()
    experiment = SchrodingerExperiment(OperatorOptimizer(section.optimizer))
    result = experiment.schrodinger_run(section.space, section.n, end_time=section.end_time, dt=section.dt,
                                        snapshots=section.snapshots, cfl=section.cfl)

    store.write_table(args.output or section.output, result.series)
    store.write_table(section.snapshot_output, result.snapshot)
    logger.info(f"Relative probability drift {result.relative_drift:.3e}")
    return EXIT_OK
