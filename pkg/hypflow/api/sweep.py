import argparse
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Tuple

from hypflow.core.config import settings
from hypflow.core.error_handling import EXIT_OK, EXIT_VIOLATION, ConfigurationError
from hypflow.schemas.experiment import ExperimentConfig, load_config
from hypflow.schemas.reports import RunSummary
from hypflow.services.experiment import output_directory, run_experiment

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("sweep", help="Run seeded perturbations of one experiment concurrently")
    parser.add_argument("config", type=Path, help="Experiment YAML file")
    parser.add_argument("--count", type=int, default=5, help="Number of trajectories")
    parser.add_argument("--output", type=Path, default=None, help="Output directory (overrides the config)")
    parser.set_defaults(handler=cmd_sweep)


def sweep_configs(config: ExperimentConfig, count: int) -> List[ExperimentConfig]:
    """One config per trajectory, seeded consecutively; each start carries at least one seeded random harmonic
    on top of the configured ones."""
    surface = config.surface
    if count > 1 and surface.snapshot is not None:
        raise ConfigurationError("sweep members cannot share a snapshot start", details={"path": str(surface.snapshot)})
    if count > 1 and surface.random_amplitude == 0.0:
        raise ConfigurationError("sweep needs a nonzero surface.random_amplitude")
    surface = surface.model_copy(update={"random_harmonics": max(1, surface.random_harmonics)})
    return [config.model_copy(update={"seed": config.seed + k, "surface": surface}) for k in range(count)]


def _run_one(job: Tuple[ExperimentConfig, Path]) -> RunSummary:
    config, directory = job
    return run_experiment(config, directory)


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    root = output_directory(config, args.output)
    jobs = [(cfg, root / f"trajectory_{k:03d}") for k, cfg in enumerate(sweep_configs(config, args.count))]
    workers = min(settings.max_workers, len(jobs))
    logger.info("sweep: %d trajectories on %d workers", len(jobs), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        summaries = list(pool.map(_run_one, jobs))
    for (cfg, directory), summary in zip(jobs, summaries):
        print(
            f"{directory}\tseed={cfg.seed}\t{summary.reason.value}"
            f"\tsteps={summary.steps}\tviolations={len(summary.violations)}"
        )
    return EXIT_VIOLATION if any(summary.has_violations for summary in summaries) else EXIT_OK
