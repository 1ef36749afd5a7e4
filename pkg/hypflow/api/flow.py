import argparse
import logging
from pathlib import Path

from hypflow.core.error_handling import EXIT_OK, EXIT_VIOLATION
from hypflow.schemas.experiment import load_config
from hypflow.services.experiment import output_directory, run_experiment

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("flow", help="Run one forced mean curvature flow trajectory")
    parser.add_argument("config", type=Path, help="Experiment YAML file")
    parser.add_argument("--output", type=Path, default=None, help="Output directory (overrides the config)")
    parser.set_defaults(handler=cmd_flow)


def cmd_flow(args: argparse.Namespace) -> int:
    """Run the flow; nonzero exit only when an invariant monitor fired"""
    config = load_config(args.config)
    summary = run_experiment(config, output_directory(config, args.output))
    print(summary.model_dump_json(indent=2))
    if summary.has_violations:
        logger.warning("%d invariant violations recorded", len(summary.violations))
        return EXIT_VIOLATION
    return EXIT_OK
