import logging

from fsbp.errors import ConstructionError
from fsbp.fixture_data import FixtureDataProvider

from . import EXIT_FAILURE, EXIT_OK

logger = logging.getLogger(__name__)


def main(config, args, store):
    provider = FixtureDataProvider()
    reports = provider.verify_all()

    summary = {}
    for name, report in reports.items():
        entry = report.as_dict()
        entry["published_spectral_norm"] = provider.tables[name].get("spectral_norm")
        summary[name] = entry
        print(f"{name:24s} pass={report.passed!s:5s} sbp={report.sbp_defect:.2e} "
              f"exactness={report.exactness_defect:.2e} |D|_2={report.spectral_norm_D:.2f}")

    try:
        comparison = provider.construction_comparison()
        print(f"{'two-step vs optimized':24s} |dp|={comparison['p_difference']:.2e} "
              f"|dQ|={comparison['Q_difference']:.2e} printed |dp|={comparison['printed_p_difference']:.2e}")
    except ConstructionError as e:
        logger.error(f"Construction comparison failed: {str(e)}")
        comparison = {"error": str(e)}
    summary["construction_comparison"] = comparison

    output = args.output or (config.fixtures.output if config.fixtures else None)
    if output:
        store.write_report(output, summary)

    failed = [name for name, report in reports.items() if not report.passed]
    if failed:
        logger.error(f"Fixtures failing verification: {', '.join(failed)}")
        return EXIT_FAILURE
    return EXIT_OK
