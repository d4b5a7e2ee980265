import logging

from fsbp.basis import make_builtin_space
from fsbp.operator_optimizer import OperatorOptimizer
from fsbp.pde_solver import AdvectionExperiment

from . import EXIT_OK, build_grid, sibling_path

logger = logging.getLogger(__name__)


def main(config, args, store):
    section = config.section("convergence")
    space = make_builtin_space(section.space)
    grid = build_grid(section.grid)

    experiment = AdvectionExperiment(OperatorOptimizer(section.optimizer))
    table = experiment.advection_convergence(space, grid, section.blocks, end_time=section.end_time,
                                             cfl=section.cfl, mode=section.mode)
    output = args.output or section.output
    store.write_table(output, table.as_frame())
    store.write_report(sibling_path(output, "_report.json"), {
        "blocks": list(section.blocks), "end_time": section.end_time,
        "fitted_order": table.fitted_order, "notes": table.notes,
    })
    for note in table.notes:
        logger.warning(note)
    logger.info(f"Fitted order {table.fitted_order:.2f} over {len(table.rows)} resolutions")
    return EXIT_OK
