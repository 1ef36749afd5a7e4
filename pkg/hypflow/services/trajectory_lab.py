"""
Post-hoc analysis of trajectory logs.

A family of logs is cut into segments between stationary surfaces of a
catalog. Each log is re-anchored at the times its modified volume first
drops eps_sep below the value of a segment's upper endpoint.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from hypflow.core.error_handling import ConfigurationError, DecompositionError, RangeError
from hypflow.core.kleinian import OPTIMAL_OUTRADIUS
from hypflow.core.sphere_grid import SphereGrid
from hypflow.models.models import Stencil, TerminationReason
from hypflow.schemas.experiment import IntegratorControls
from hypflow.schemas.reports import DecompositionReport, SegmentRecord
from hypflow.services.flow_engine import Snapshot, TrajectoryLog, run
from hypflow.services.forcing import ForcingField
from hypflow.services.hypersurface import RadialGraph, modified_volume, surface_distance
from hypflow.services.stationary import solve_stationary

logger = logging.getLogger(__name__)

UNRESOLVED = "unresolved"
DEFAULT_MATCH_TOL = 1e-4
DEFAULT_PLATEAU_TOL = 1e-6
MONOTONICITY_SLACK = 1e-9


@dataclass(frozen=True)
class CatalogEntry:
    label: str
    surface: RadialGraph
    volume: float

    @classmethod
    def from_surface(cls, label: str, surface: RadialGraph, h: ForcingField) -> "CatalogEntry":
        return cls(label=label, surface=surface, volume=modified_volume(surface, h))


@dataclass(frozen=True)
class EndpointMatch:
    minus: str
    plus: str
    minus_distance: Optional[float] = None
    plus_distance: Optional[float] = None


@dataclass(frozen=True)
class TrajectorySegment:
    minus: str
    plus: str
    volume_minus: float
    volume_plus: float
    # observed plateau surfaces and their distances to the catalog
    minus_surface: Optional[RadialGraph] = None
    plus_surface: Optional[RadialGraph] = None
    minus_distance: float = 0.0
    plus_distance: float = 0.0


@dataclass
class BrokenTrajectory:
    segments: List[TrajectorySegment]
    shift_times: List[List[float]]
    eps_sep: float
    match_tol: float = DEFAULT_MATCH_TOL
    plateau_tol: float = DEFAULT_PLATEAU_TOL
    degenerate: bool = False

    @property
    def interior_distances(self) -> List[float]:
        distances = []
        for before, after in zip(self.segments, self.segments[1:]):
            if before.plus_surface is not None and after.minus_surface is not None:
                distances.append(surface_distance(before.plus_surface, after.minus_surface))
        return distances

    def verify(self) -> None:
        """Raise DecompositionError unless the endpoint chain is consistent."""
        for before, after in zip(self.segments, self.segments[1:]):
            if before.plus != after.minus:
                raise DecompositionError(
                    "consecutive segments do not share an endpoint",
                    details={"plus": before.plus, "minus": after.minus},
                )
        for distance in self.interior_distances:
            if distance >= self.match_tol:
                raise DecompositionError("interior endpoints do not match", details={"distance": distance})
        if self.degenerate:
            return
        for segment in self.segments:
            required = 0.0 if segment.minus == UNRESOLVED else self.eps_sep
            if segment.volume_minus - segment.volume_plus < required:
                raise DecompositionError(
                    "modified volume does not drop across a segment",
                    details={
                        "minus": segment.minus,
                        "plus": segment.plus,
                        "V_minus": segment.volume_minus,
                        "V_plus": segment.volume_plus,
                    },
                )
        for times in self.shift_times:
            if any(later <= earlier for earlier, later in zip(times, times[1:])):
                raise DecompositionError("shift times are not increasing", details={"times": times})

    def to_report(self) -> DecompositionReport:
        first = self.shift_times[0] if self.shift_times else []
        return DecompositionReport(
            segments=[
                SegmentRecord(
                    i_minus=segment.minus,
                    i_plus=segment.plus,
                    V_minus=segment.volume_minus,
                    V_plus=segment.volume_plus,
                    t_shift=first[index],
                )
                for index, segment in enumerate(self.segments)
            ],
            eps_sep=self.eps_sep,
            tolerances={
                "match_tol": self.match_tol,
                "plateau_tol": self.plateau_tol,
                "monotonicity_slack": MONOTONICITY_SLACK,
            },
            shift_times=self.shift_times,
        )


def level_crossing_time(log: TrajectoryLog, v: float) -> float:
    """Earliest time with V <= v, interpolated linearly between records."""
    volumes = log.volumes
    times = log.times
    if volumes.size == 0:
        raise RangeError("empty log")
    if v > volumes[0] or v < volumes.min():
        raise RangeError(
            "level outside the range of the log",
            details={"level": v, "V_first": float(volumes[0]), "V_min": float(volumes.min())},
        )
    index = int(np.argmax(volumes <= v))
    if index == 0:
        return float(times[0])
    upper, lower = volumes[index - 1], volumes[index]
    fraction = (upper - v) / (upper - lower)
    return float(times[index - 1] + fraction * (times[index] - times[index - 1]))


def _nearest(surface: RadialGraph, catalog: Sequence[CatalogEntry]) -> Tuple[CatalogEntry, float]:
    distances = [surface_distance(surface, entry.surface) for entry in catalog]
    best = int(np.argmin(distances))
    return catalog[best], float(distances[best])


def _check_catalog(catalog: Sequence[CatalogEntry]) -> None:
    if not catalog:
        raise ConfigurationError("stationary catalog is empty")
    labels = [entry.label for entry in catalog]
    if len(set(labels)) != len(labels) or UNRESOLVED in labels:
        raise ConfigurationError("catalog labels must be unique", details={"labels": labels})


def detect_endpoints(
    log: TrajectoryLog, catalog: Sequence[CatalogEntry], match_tol: float = DEFAULT_MATCH_TOL
) -> EndpointMatch:
    _check_catalog(catalog)
    if not log.snapshots:
        return EndpointMatch(UNRESOLVED, UNRESOLVED)

    start, start_distance = _nearest(log.snapshots[0].surface, catalog)
    minus = start.label if start_distance < match_tol else UNRESOLVED

    plus, plus_distance = UNRESOLVED, None
    converged = log.termination is None or log.termination.reason is TerminationReason.CONVERGED
    if converged:
        end, plus_distance = _nearest(log.snapshots[-1].surface, catalog)
        if plus_distance < match_tol:
            plus = end.label
    logger.info("endpoints: %s -> %s", minus, plus)
    return EndpointMatch(minus, plus, start_distance, plus_distance)


def audit_monotone(log: TrajectoryLog, slack: float = MONOTONICITY_SLACK) -> None:
    increases = np.diff(log.volumes)
    if increases.size and float(np.max(increases)) > slack:
        step = int(np.argmax(increases)) + 1
        raise DecompositionError(
            "modified volume increases along the log",
            details={"step": log.records[step].step, "increase": float(increases[step - 1])},
        )


def _plateau_chain(
    log: TrajectoryLog,
    catalog: Sequence[CatalogEntry],
    match_tol: float,
    plateau_tol: float,
) -> Tuple[List[str], Dict[str, Tuple[RadialGraph, float]], bool]:
    """Ordered labels of the plateaus visited by a log, the closest observation of each,
    and whether the first snapshot already sits on a plateau."""
    residual_by_step = {record.step: record.residual for record in log.records}
    chain: List[str] = []
    closest: Dict[str, Tuple[RadialGraph, float]] = {}
    starts_on_plateau = False
    for index, snap in enumerate(log.snapshots):
        entry, distance = _nearest(snap.surface, catalog)
        if distance < match_tol:
            if not chain or chain[-1] != entry.label:
                if entry.label in chain:
                    raise DecompositionError("log revisits a plateau", details={"label": entry.label, "t": snap.time})
                chain.append(entry.label)
            if entry.label not in closest or distance < closest[entry.label][1]:
                closest[entry.label] = (snap.surface, distance)
            if index == 0:
                starts_on_plateau = True
            continue
        residual = residual_by_step.get(snap.step)
        if residual is not None and residual < plateau_tol:
            raise DecompositionError(
                "stationary plateau not found in the catalog",
                details={"t": snap.time, "residual": residual, "nearest": entry.label, "distance": distance},
            )
    return chain, closest, starts_on_plateau


def decompose(
    logs: Sequence[TrajectoryLog],
    catalog: Sequence[CatalogEntry],
    eps_sep: float,
    match_tol: float = DEFAULT_MATCH_TOL,
    plateau_tol: float = DEFAULT_PLATEAU_TOL,
) -> BrokenTrajectory:
    """Cut a family of logs into segments between catalog surfaces."""
    _check_catalog(catalog)
    if not logs:
        raise ConfigurationError("no logs to decompose")
    volumes = sorted(entry.volume for entry in catalog)
    gaps = np.diff(volumes)
    if gaps.size and float(np.min(gaps)) < eps_sep:
        raise ConfigurationError(
            "catalog volumes are closer than eps_sep", details={"min_gap": float(np.min(gaps)), "eps_sep": eps_sep}
        )
    by_label = {entry.label: entry for entry in catalog}

    reference: Optional[Tuple[List[str], bool]] = None
    observations: List[Dict[str, Tuple[RadialGraph, float]]] = []
    for log in logs:
        audit_monotone(log)
        chain, closest, anchored = _plateau_chain(log, catalog, match_tol, plateau_tol)
        if not chain:
            raise DecompositionError("log never reaches a catalog surface", details={"records": len(log.records)})
        if reference is None:
            reference = (chain, anchored)
        elif (chain, anchored) != reference:
            raise DecompositionError(
                "logs of the family visit different plateaus",
                details={"expected": reference[0], "found": chain},
            )
        observations.append(closest)
    assert reference is not None
    chain, anchored = reference

    def observed(label: str) -> Tuple[RadialGraph, float]:
        return min((obs[label] for obs in observations), key=lambda item: item[1])

    segments: List[TrajectorySegment] = []
    if len(chain) == 1 and anchored:
        surface, distance = observed(chain[0])
        entry = by_label[chain[0]]
        segments.append(
            TrajectorySegment(
                entry.label, entry.label, entry.volume, entry.volume, surface, surface, distance, distance
            )
        )
        broken = BrokenTrajectory(
            segments, [[float(log.times[0])] for log in logs], eps_sep, match_tol, plateau_tol, degenerate=True
        )
        broken.verify()
        return broken

    labels = list(chain) if anchored else [UNRESOLVED] + list(chain)
    for minus, plus in zip(labels, labels[1:]):
        plus_surface, plus_distance = observed(plus)
        if minus == UNRESOLVED:
            volume_minus = max(float(log.volumes[0]) for log in logs)
            minus_surface, minus_distance = None, 0.0
        else:
            volume_minus = by_label[minus].volume
            minus_surface, minus_distance = observed(minus)
        segments.append(
            TrajectorySegment(
                minus,
                plus,
                volume_minus,
                by_label[plus].volume,
                minus_surface,
                plus_surface,
                minus_distance,
                plus_distance,
            )
        )

    shift_times: List[List[float]] = []
    for log in logs:
        times = []
        for segment in segments:
            if segment.minus == UNRESOLVED:
                times.append(float(log.times[0]))
                continue
            try:
                times.append(level_crossing_time(log, segment.volume_minus - eps_sep))
            except RangeError as error:
                raise DecompositionError(
                    "log never leaves a plateau by eps_sep", details={"label": segment.minus, **(error.details or {})}
                ) from error
        shift_times.append(times)

    broken = BrokenTrajectory(segments, shift_times, eps_sep, match_tol, plateau_tol)
    broken.verify()
    logger.info("decomposed %d logs into %d segments", len(logs), len(segments))
    return broken


# -- fixtures ------------------------------------------------------------------------

# radial bump about the origin with three stationary spheres inside the optimal ball
FIXTURE_FORCING = {"base": 1.8, "amplitude": 14.0, "width": 0.12}


@dataclass(frozen=True)
class PlateauFixture:
    logs: List[TrajectoryLog]
    catalog: List[CatalogEntry]
    forcing: ForcingField
    eps_sep: float
    # index of the first record of the second run in each log
    joins: List[int] = field(default_factory=list)


def stationary_radii(h: ForcingField, n: int, samples: int = 400) -> List[float]:
    """Hyperbolic radii of the stationary spheres about the origin, for h radial about the origin."""
    axis = np.zeros(n + 1)
    axis[0] = 1.0

    def gap(radius: float) -> float:
        return float(h.value(np.tanh(radius) * axis)) - 1.0 / np.tanh(radius)

    grid = np.linspace(1e-2, OPTIMAL_OUTRADIUS - 1e-3, samples)
    values = [gap(radius) for radius in grid]
    roots = []
    for left, right, f_left, f_right in zip(grid, grid[1:], values, values[1:]):
        if f_left == 0.0:
            roots.append(float(left))
        elif f_left * f_right < 0.0:
            roots.append(float(optimize.brentq(gap, left, right, xtol=1e-15)))
    return roots


def join_logs(first: TrajectoryLog, second: TrajectoryLog, pause: float) -> Tuple[TrajectoryLog, int]:
    """``second`` appended ``pause`` time units after ``first``, with its steps renumbered."""
    step0 = first.records[-1].step + 1
    t0 = first.records[-1].t + pause
    records = list(first.records) + [
        record.model_copy(update={"step": record.step + step0, "t": record.t + t0, "dt": record.dt or pause})
        for record in second.records
    ]
    snapshots = list(first.snapshots) + [
        Snapshot(snap.step + step0, snap.time + t0, snap.surface) for snap in second.snapshots
    ]
    termination = None
    if second.termination is not None:
        termination = second.termination.model_copy(
            update={
                "step": second.termination.step + step0,
                "t": second.termination.t + t0,
                "violations": first.violations + second.violations,
            }
        )
    return TrajectoryLog(records, snapshots, termination), len(first.records)


def build_two_plateau_fixture(
    grid: Optional[SphereGrid] = None,
    offsets: Sequence[float] = (2e-5, 4e-5),
    start_times: Sequence[float] = (0.0, 0.5),
    controls: Optional[IntegratorControls] = None,
) -> PlateauFixture:
    """
    Family of logs through the three stationary spheres of a radial bump forcing.

    The catalog holds the Newton-solved spheres labelled by decreasing modified
    volume. Each log joins two runs: one started on the upper sphere, which stays
    there, and one started ``offset`` off the middle sphere towards the lower one,
    which settles on the lower sphere. Logs differ in the offset and the time origin.
    """
    grid = grid or SphereGrid.build(1, 16, Stencil.SPECTRAL)
    h = ForcingField.radial_bump(center=np.zeros(grid.n + 1), **FIXTURE_FORCING)
    radii = stationary_radii(h, grid.n)
    if len(radii) != 3:
        raise DecompositionError("fixture forcing needs three stationary spheres", details={"radii": radii})
    spheres = [(radius, solve_stationary(RadialGraph.geodesic_sphere(grid, radius), h)) for radius in radii]
    spheres.sort(key=lambda item: modified_volume(item[1], h), reverse=True)
    labels = ("upper", "middle", "lower")
    catalog = [CatalogEntry.from_surface(label, surface, h) for label, (_, surface) in zip(labels, spheres)]
    (_, upper), (middle_radius, _), (lower_radius, _) = spheres

    controls = controls or IntegratorControls(
        tol_stationary=1e-8, stationary_window=20, max_steps=20000, snapshot_every=200, radii_every=100000
    )
    plateau = run(upper, h, controls)
    direction = float(np.sign(lower_radius - middle_radius))
    logs, joins = [], []
    for offset, start in zip(offsets, start_times):
        descent = run(RadialGraph.geodesic_sphere(grid, middle_radius + direction * offset), h, controls)
        log, join = join_logs(plateau.shifted(start), descent, pause=controls.dt_max)
        logs.append(log)
        joins.append(join)
        logger.info("fixture log: %d records, join at %d, %s", len(log.records), join, descent.termination)

    gaps = -np.diff([entry.volume for entry in catalog])
    return PlateauFixture(logs=logs, catalog=catalog, forcing=h, eps_sep=0.25 * float(np.min(gaps)), joins=joins)
