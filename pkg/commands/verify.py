import json
import logging

from fsbp.basis import make_builtin_space
from fsbp.errors import ConfigError
from fsbp.operator_verifier import OperatorVerifier

from . import EXIT_FAILURE, EXIT_OK

logger = logging.getLogger(__name__)


def main(config, args, store):
    section = config.verify
    path = args.operator or (section.operator if section else None)
    if path is None:
        raise ConfigError("verify.operator", "no operator file given (use --operator)")

    operator_file = store.read_operator(path)
    # Without a configured space the file's own descriptor is used
    space = make_builtin_space(section.space if section else operator_file.space)
    tol = section.tol if section else 1e-10

    report = OperatorVerifier().check_operator(operator_file.to_operator(), space, tol=tol)
    print(json.dumps(report.as_dict(), indent=2))
    output = args.output or (section.output if section else None)
    if output:
        store.write_report(output, report.as_dict())

    logger.info(f"Verification of {path}: pass={report.passed}")
    return EXIT_OK if report.passed else EXIT_FAILURE
