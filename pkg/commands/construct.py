import logging

from fsbp.basis import make_builtin_space
from fsbp.errors import InfeasibleConstructionError
from fsbp.operator_optimizer import OperatorOptimizer
from fsbp.operator_store import OperatorFile
from fsbp.operator_verifier import OperatorVerifier

from . import EXIT_FAILURE, EXIT_OK, build_grid, sibling_path

logger = logging.getLogger(__name__)


def main(config, args, store):
    section = config.section("construct")
    output = args.output or section.output
    report_path = section.report or sibling_path(output, "_report.json")

    space = make_builtin_space(section.space)
    grid = build_grid(section.grid)
    optimizer = OperatorOptimizer(section.optimizer)

    try:
        op, report = optimizer.construct_operator(space, grid, section.mode, section.bandwidth)
    except InfeasibleConstructionError as e:
        logger.error(str(e))
        store.write_report(report_path, {"optimization": e.report.as_dict() if e.report else None})
        return EXIT_FAILURE

    verification = OperatorVerifier().check_operator(op, space)
    operator_file = OperatorFile.from_operator(
        op, space.descriptor, mode=section.mode, bandwidth=section.bandwidth,
        seed=section.optimizer.rng_seed, residual=report.final_objective,
    )
    store.write_operator(output, operator_file)
    store.write_report(report_path, {"optimization": report.as_dict(), "verification": verification.as_dict()})

    if not report.verified:
        logger.warning(f"Operator written to {output} but did not pass verification")
        return EXIT_FAILURE
    logger.info(f"Constructed {space.name} operator on {grid.n} nodes in {report.iterations} iterations")
    return EXIT_OK
