import argparse
from pathlib import Path

from hypflow.core.error_handling import EXIT_OK
from hypflow.schemas.experiment import load_config
from hypflow.schemas.records import write_model
from hypflow.services.experiment import build_forcing, build_initial_surface, output_directory
from hypflow.services.flow_engine import admit
from hypflow.services.stationary import newton_solve, stationary_report


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("stationary", help="Solve H = h and probe the Jacobi spectrum")
    parser.add_argument("config", type=Path, help="Experiment YAML file")
    parser.add_argument("--output", type=Path, default=None, help="Output directory (overrides the config)")
    parser.add_argument("--label", default="stationary", help="Catalog label stored in the report")
    parser.set_defaults(handler=cmd_stationary)


def cmd_stationary(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    h = build_forcing(config)
    result = newton_solve(build_initial_surface(config, h), h, config.stationary)
    admit(result.surface, config.integrator.pinching)
    report = stationary_report(result, h, config.forcing, config.stationary.kernel_tol, label=args.label)
    write_model(report, output_directory(config, args.output) / f"{args.label}.json")
    print(report.model_dump_json(indent=2, exclude={"surface"}))
    return EXIT_OK
