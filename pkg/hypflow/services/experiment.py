import json
import logging
from pathlib import Path
from typing import List, Optional

import numpy as np

from hypflow.core.config import settings
from hypflow.core.error_handling import ConfigurationError
from hypflow.core.kleinian import arccoth
from hypflow.core.sphere_grid import SphereGrid
from hypflow.schemas.experiment import CatalogSpec, ExperimentConfig, SurfaceSpec
from hypflow.schemas.records import SurfaceSnapshot, read_snapshot, write_model
from hypflow.schemas.reports import RunSummary, StationaryReport
from hypflow.services import flow_engine
from hypflow.services.forcing import ForcingField
from hypflow.services.hypersurface import RadialGraph, harmonic
from hypflow.services.trajectory_lab import CatalogEntry

logger = logging.getLogger(__name__)


def build_grid(config: ExperimentConfig) -> SphereGrid:
    return SphereGrid.build(config.n, config.resolution, config.stencil)


def build_forcing(config: ExperimentConfig) -> ForcingField:
    return ForcingField.from_spec(config.forcing, config.n + 1)


def output_directory(config: ExperimentConfig, override: Optional[Path] = None) -> Path:
    """Command-line override, then the config, then HYPFLOW_OUTPUT_DIR."""
    return Path(override or config.output.directory or settings.OUTPUT_DIR)


def _random_harmonics(spec: SurfaceSpec, n: int, seed: int) -> List[tuple]:
    rng = np.random.default_rng(seed)
    chosen = []
    for _ in range(spec.random_harmonics):
        degree = int(rng.integers(1, spec.random_max_degree + 1))
        order = int(rng.choice([-1, 1])) if n == 1 else int(rng.integers(-degree, degree + 1))
        chosen.append((degree, order, float(rng.uniform(-spec.random_amplitude, spec.random_amplitude))))
    return chosen


def build_initial_surface(config: ExperimentConfig, h: Optional[ForcingField] = None) -> RadialGraph:
    """Initial radial graph: a snapshot file, or a geodesic sphere scaled by harmonic profiles."""
    spec = config.surface
    if spec.snapshot is not None:
        try:
            surface = RadialGraph.from_snapshot(read_snapshot(spec.snapshot))
        except OSError as error:
            raise ConfigurationError("Cannot read surface snapshot", details={"path": str(spec.snapshot)}) from error
        if surface.n != config.n:
            raise ConfigurationError("snapshot dimension differs from n", details={"snapshot_n": surface.n})
        return surface

    grid = build_grid(config)
    h = h or build_forcing(config)
    if spec.radius is not None:
        radius = spec.radius
    else:
        radius = arccoth(h.bounds.h_min)
    radius += spec.radius_offset
    if radius <= 0.0:
        raise ConfigurationError("initial radius must be positive", details={"radius": radius})

    surface = RadialGraph.geodesic_sphere(grid, radius, spec.center)
    harmonics = [(item.degree, item.order, item.amplitude) for item in spec.harmonics]
    harmonics += _random_harmonics(spec, config.n, config.seed)
    if not harmonics:
        return surface
    profile = np.ones(grid.shape)
    for degree, order, amplitude in harmonics:
        profile = profile + amplitude * harmonic(grid, degree, order)
    logger.debug("initial harmonics: %s", harmonics)
    return surface.with_rho(surface.rho * profile)


def run_experiment(config: ExperimentConfig, directory: Path) -> RunSummary:
    """Run one trajectory and write its log, snapshots, CSV and summary under ``directory``."""
    h = build_forcing(config)
    initial = build_initial_surface(config, h)
    log = flow_engine.run(initial, h, config.integrator)
    directory = Path(directory)
    log_path = log.write(directory)
    csv_path = log.write_csv(directory / "diagnostics.csv") if config.output.write_csv else None
    termination = log.termination
    final = flow_engine.make_state(log.snapshots[-1].surface, h).diagnostics
    summary = RunSummary(
        reason=termination.reason,
        steps=termination.step,
        final_time=termination.t,
        message=termination.message,
        violations=termination.violations,
        final=final,
        log_path=log_path,
        csv_path=csv_path,
    )
    write_model(summary, directory / "summary.json")
    return summary


def load_catalog(spec: CatalogSpec, h: ForcingField) -> List[CatalogEntry]:
    entries = []
    for item in spec.entries:
        try:
            document = json.loads(Path(item.path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as error:
            raise ConfigurationError("Cannot read catalog surface", details={"path": str(item.path)}) from error
        if "surface" in document:
            snapshot = StationaryReport.model_validate(document).surface
        else:
            snapshot = SurfaceSnapshot.model_validate(document)
        entries.append(CatalogEntry.from_surface(item.label, RadialGraph.from_snapshot(snapshot), h))
    return entries
