import argparse
from pathlib import Path

from hypflow.core.config import settings
from hypflow.core.error_handling import EXIT_OK, EXIT_VIOLATION
from hypflow.schemas.experiment import load_config
from hypflow.schemas.records import write_model
from hypflow.services.audit import MUTATIONS, AuditSuite


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("check", help="Run the numerical audit suite")
    parser.add_argument("config", type=Path, nargs="?", default=None, help="Optional experiment YAML (seed)")
    parser.add_argument("--mutate", choices=MUTATIONS, default=None, help="Inject a known defect")
    parser.add_argument("--resolution-scale", type=float, default=1.0, help="Scale the reference resolutions")
    parser.add_argument("--only", action="append", default=None, help="Run only the named check (repeatable)")
    parser.add_argument("--output", type=Path, default=None, help="Write the audit report JSON here")
    parser.set_defaults(handler=cmd_check)


def cmd_check(args: argparse.Namespace) -> int:
    seed = load_config(args.config).seed if args.config else settings.DEFAULT_SEED
    report = AuditSuite(args.resolution_scale, args.mutate, seed).run(args.only)
    if args.output is not None:
        write_model(report, args.output)
    print(report.model_dump_json(indent=2))
    return EXIT_OK if report.passed else EXIT_VIOLATION
