"""
Entry point of the plan command.

Exit codes: 0 success, 1 usage error, 2 scenario parse or validation
failure, 3 runtime failure.
"""
import logging
import os
import sys
from typing import Optional, Sequence

from ska_ser_logging import configure_logging

from anyplan.bench import ui
from anyplan.bench.workers import BenchmarkRunError
from anyplan.world.scenario import ScenarioError

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SCENARIO = 2
EXIT_RUNTIME = 3


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse the command line, configure logging and run the selected command.

    :param argv: arguments, defaulting to sys.argv[1:]
    :return: process exit code
    """
    try:
        args = ui.build_parser().parse_args(argv)
    except ui.UsageError as e:
        sys.stderr.write(f"{e}\n")
        return EXIT_USAGE

    configure_logging("DEBUG" if args.verbose else os.getenv("LOG_LEVEL", "INFO"))
    try:
        return ui.COMMANDS[args.command](args)
    except ui.UsageError as e:
        LOGGER.error("%s", e)
        return EXIT_USAGE
    except KeyError as e:
        LOGGER.error("%s", e.args[0] if e.args else e)
        return EXIT_USAGE
    except ScenarioError as e:
        LOGGER.error("Invalid scenario: %s", e)
        return EXIT_SCENARIO
    except OSError as e:
        LOGGER.error("I/O error on %s: %s", e.filename, e.strerror or e)
        return EXIT_RUNTIME
    except BenchmarkRunError as e:
        LOGGER.error("%s", e, exc_info=e.__cause__)
        return EXIT_RUNTIME
    except (ValueError, RuntimeError) as e:
        LOGGER.error("Run failed: %s", e, exc_info=True)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
