import argparse
from pathlib import Path

from hypflow.core.error_handling import EXIT_OK, ConfigurationError
from hypflow.schemas.experiment import load_catalog_spec, load_config
from hypflow.schemas.records import write_model
from hypflow.services.experiment import build_forcing, load_catalog
from hypflow.services.flow_engine import TrajectoryLog
from hypflow.services.trajectory_lab import DEFAULT_MATCH_TOL, build_two_plateau_fixture, decompose


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("decompose", help="Cut trajectory logs into segments between stationary surfaces")
    parser.add_argument("config", type=Path, nargs="?", default=None, help="Experiment YAML (forcing)")
    parser.add_argument("--catalog", type=Path, default=None, help="Catalog YAML of labelled stationary surfaces")
    parser.add_argument("--log", type=Path, action="append", default=[], help="Run directory (repeatable)")
    parser.add_argument("--eps-sep", type=float, default=None, help="Level separation below catalog values")
    parser.add_argument("--match-tol", type=float, default=DEFAULT_MATCH_TOL, help="Surface distance for matches")
    parser.add_argument("--fixture", action="store_true", help="Decompose the built-in three-sphere bump family")
    parser.add_argument("--output", type=Path, default=None, help="Write the decomposition report JSON here")
    parser.set_defaults(handler=cmd_decompose)


def cmd_decompose(args: argparse.Namespace) -> int:
    if args.fixture:
        fixture = build_two_plateau_fixture()
        logs, catalog = fixture.logs, fixture.catalog
        eps_sep = args.eps_sep or fixture.eps_sep
    else:
        if args.config is None or args.catalog is None or not args.log:
            raise ConfigurationError("decompose needs a config, a catalog and at least one --log")
        if args.eps_sep is None:
            raise ConfigurationError("decompose needs --eps-sep")
        h = build_forcing(load_config(args.config))
        catalog = load_catalog(load_catalog_spec(args.catalog), h)
        logs = [TrajectoryLog.read(path) for path in args.log]
        eps_sep = args.eps_sep
    report = decompose(logs, catalog, eps_sep, match_tol=args.match_tol).to_report()
    if args.output is not None:
        write_model(report, args.output)
    print(report.model_dump_json(indent=2))
    return EXIT_OK
