import argparse
import logging
import os
import sys

from fsbp.config import RunConfig, load_config, load_environment
from fsbp.errors import ConfigError, FsbpError, OperatorFileError
from fsbp.operator_store import OperatorStore

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

logger = logging.getLogger(__name__)


def setup_logging():
    """Console logging, plus a log file when FSBP_LOG_FILE is set."""
    handlers = [logging.StreamHandler()]
    log_file = os.getenv('FSBP_LOG_FILE')
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    level = os.getenv('FSBP_LOG_LEVEL', 'INFO').upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format=LOG_FORMAT, handlers=handlers)


def build_parser():
    parser = argparse.ArgumentParser(prog="fsbp", description="Construct and verify function-space SBP operators")
    subparsers = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("construct", "construct an operator and write it with its report"),
        ("verify", "verify an operator file against a function space"),
        ("convergence", "periodic advection convergence study"),
        ("schrodinger", "Schrodinger run with probability tracking"),
        ("fixtures", "verify the embedded published operators"),
    ):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", help="JSON configuration file")
        sub.add_argument("--output", help="override the configured output path")
        if name in ("construct", "convergence", "schrodinger"):
            sub.add_argument("--seed", type=int, help="override every optimizer seed")
        if name == "verify":
            sub.add_argument("--operator", help="operator JSON file")
    return parser


def _dispatch(command):
    from commands import construct, convergence, fixtures, schrodinger, verify

    return {
        "construct": construct.main,
        "verify": verify.main,
        "convergence": convergence.main,
        "schrodinger": schrodinger.main,
        "fixtures": fixtures.main,
    }[command]


def cli_main(argv=None):
    """Entry point; returns 0 on success, 1 on failed verification or construction, 2 on usage errors."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    logger.info(f"Running subcommand '{args.command}'")
    try:
        config = load_config(args.config) if args.config else RunConfig()
        seed = getattr(args, "seed", None)
        if seed is None:
            seed = load_environment()
        elif seed < 0:
            raise ConfigError("--seed", f"expected a non-negative integer, got {seed}")
        if seed is not None:
            config = config.with_seed(seed)
        return _dispatch(args.command)(config, args, OperatorStore())
    except (ConfigError, OperatorFileError) as e:
        logger.error(f"Configuration error: {str(e)}")
        return EXIT_USAGE
    except FsbpError as e:
        logger.error(f"{args.command} failed: {str(e)}")
        return EXIT_FAILURE


if __name__ == "__main__":
    setup_logging()
    sys.exit(cli_main())
