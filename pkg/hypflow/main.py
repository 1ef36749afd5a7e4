import argparse
import json
import logging
import sys
from typing import List, Optional

from dotenv import load_dotenv

from hypflow.api import check, decompose, flow, stationary, sweep
from hypflow.core.config import settings
from hypflow.core.error_handling import HypflowException, numerical_error_handler

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)


def create_parser() -> argparse.ArgumentParser:
    """
    Application factory for the command line
    """
    parser = argparse.ArgumentParser(
        prog="hypflow",
        description="Forced mean curvature flow laboratory for convex hypersurfaces in the Kleinian ball",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Log at DEBUG level")
    subparsers = parser.add_subparsers(dest="command", required=True)

    # Include subcommands
    flow.register(subparsers)
    stationary.register(subparsers)
    check.register(subparsers)
    sweep.register(subparsers)
    decompose.register(subparsers)
    return parser


def configure_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv: Optional[List[str]] = None) -> int:
    args = create_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        return int(args.handler(args))
    except HypflowException as exc:
        logger.error("%s: %s", exc.error_code, exc.message)
        print(json.dumps(exc.detail, default=str), file=sys.stderr)
        return exc.exit_code
    except (ArithmeticError, ValueError) as exc:
        error = numerical_error_handler(exc)
        logger.error("%s: %s", error.error_code, error.message)
        return error.exit_code


if __name__ == "__main__":
    sys.exit(main())
