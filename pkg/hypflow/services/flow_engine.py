"""
Forced mean curvature flow <d_t X, N> = h(X) - H of radial graphs.

Each node moves along its ray; the normal speed is converted to a radial
rate by the exact graph factor, so the representation never needs
remeshing. Steps are classical RK4 with

    dt = min(dt_max, c_stab / max(|A|^2, h_max^2), c_stab * ds_min^2)

where ds_min is the smallest hyperbolic grid edge.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import integrate

from hypflow.core.error_handling import (
    AdmissionError,
    BlowUpError,
    DegeneracyError,
    DenserLogRequired,
    DomainError,
    EstimationError,
    PreconditionError,
)
from hypflow.core.kleinian import OPTIMAL_OUTRADIUS, distance_array, metric_tensor
from hypflow.models.models import Severity, SurfaceDiagnostics, TerminationReason, Violation, ViolationKind
from hypflow.schemas.experiment import IntegratorControls
from hypflow.schemas.records import StepRecord, TerminationRecord, log_line_adapter, read_snapshot, write_model
from hypflow.schemas.reports import (
    DissipationPair,
    DissipationReport,
    EvolutionResidualReport,
    ResidualPair,
    SelectionCheck,
)
from hypflow.services.forcing import ForcingField, confinement_radii, restricted_hessian
from hypflow.services.hypersurface import (
    FundamentalForms,
    RadialGraph,
    christoffel_symbols,
    covariant_hessian,
    diagnose,
    enclosing_ball,
    hyperbolic_forms,
    laplacian,
    modified_volume,
    node_spacing,
)

logger = logging.getLogger(__name__)

PINCHING_TOLERANCE = 1e-12


@dataclass(frozen=True)
class FlowState:
    surface: RadialGraph
    time: float
    forms: FundamentalForms
    diagnostics: SurfaceDiagnostics
    step: int = 0


@dataclass(frozen=True)
class Snapshot:
    step: int
    time: float
    surface: RadialGraph


@dataclass
class TrajectoryLog:
    """Per-step records, periodic surface snapshots and the termination record."""

    records: List[StepRecord] = field(default_factory=list)
    snapshots: List[Snapshot] = field(default_factory=list)
    termination: Optional[TerminationRecord] = None

    @property
    def times(self) -> np.ndarray:
        return np.array([record.t for record in self.records])

    @property
    def volumes(self) -> np.ndarray:
        return np.array([record.V for record in self.records])

    @property
    def violations(self) -> List[Violation]:
        return [] if self.termination is None else list(self.termination.violations)

    def shifted(self, offset: float) -> "TrajectoryLog":
        """Same log with the time origin moved by ``offset``."""
        records = [record.model_copy(update={"t": record.t + offset}) for record in self.records]
        snapshots = [Snapshot(snap.step, snap.time + offset, snap.surface) for snap in self.snapshots]
        termination = None
        if self.termination is not None:
            termination = self.termination.model_copy(update={"t": self.termination.t + offset})
        return TrajectoryLog(records, snapshots, termination)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([record.model_dump(exclude={"kind"}) for record in self.records])

    def write(self, directory: Path) -> Path:
        directory = Path(directory)
        (directory / "snapshots").mkdir(parents=True, exist_ok=True)
        path = directory / "log.jsonl"
        with path.open("w", encoding="utf-8") as handle:
            for record in self.records:
                handle.write(record.model_dump_json() + "\n")
            if self.termination is not None:
                handle.write(self.termination.model_dump_json() + "\n")
        for snap in self.snapshots:
            write_model(
                snap.surface.to_snapshot(time=snap.time, step=snap.step),
                directory / "snapshots" / f"step_{snap.step:07d}.json",
            )
        return path

    def write_csv(self, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.17g")
        return path

    @classmethod
    def read(cls, directory: Path) -> "TrajectoryLog":
        directory = Path(directory)
        log = cls()
        with (directory / "log.jsonl").open(encoding="utf-8") as handle:
            for line in handle:
                if not line.strip():
                    continue
                entry = log_line_adapter.validate_python(json.loads(line))
                if isinstance(entry, StepRecord):
                    log.records.append(entry)
                else:
                    log.termination = entry
        for path in sorted((directory / "snapshots").glob("step_*.json")):
            snapshot = read_snapshot(path)
            log.snapshots.append(
                Snapshot(snapshot.step or 0, snapshot.time or 0.0, RadialGraph.from_snapshot(snapshot))
            )
        return log


# -- single steps ---------------------------------------------------------------


def normal_speed(forms: FundamentalForms, h: ForcingField) -> np.ndarray:
    return h.value(forms.position) - forms.mean_curvature


def radial_velocity(forms: FundamentalForms, h: ForcingField) -> np.ndarray:
    """d rho / dt of the radial graph under the forced flow."""
    return forms.radial_rate_factor * normal_speed(forms, h)


def make_state(
    surface: RadialGraph,
    h: ForcingField,
    time: float = 0.0,
    step: int = 0,
    forms: Optional[FundamentalForms] = None,
    with_inradius: bool = True,
    outradius_value: Optional[float] = None,
) -> FlowState:
    forms = forms or hyperbolic_forms(surface)
    diagnostics = diagnose(surface, h, forms, with_inradius=with_inradius, outradius_value=outradius_value)
    return FlowState(surface=surface, time=time, forms=forms, diagnostics=diagnostics, step=step)


def stable_dt(state: FlowState, h: ForcingField, controls: IntegratorControls) -> float:
    curvature = max(float(np.max(state.forms.shape_norm)) ** 2, h.bounds.h_max**2)
    spacing = node_spacing(state.forms)
    return min(controls.dt_max, controls.c_stab / curvature, controls.c_stab * spacing**2)


def advance(state: FlowState, h: ForcingField, dt: float) -> RadialGraph:
    """RK4 update of rho; returns the new surface only."""
    surface = state.surface

    def rate(rho: np.ndarray) -> np.ndarray:
        return radial_velocity(hyperbolic_forms(surface.with_rho(rho)), h)

    rho = surface.rho
    k1 = radial_velocity(state.forms, h)
    k2 = rate(rho + 0.5 * dt * k1)
    k3 = rate(rho + 0.5 * dt * k2)
    k4 = rate(rho + dt * k3)
    new_surface = surface.with_rho(rho + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0)
    return new_surface


def step(
    state: FlowState,
    h: ForcingField,
    dt: float,
    curvature_cap: float = 1e6,
    with_inradius: bool = False,
) -> FlowState:
    if np.min(state.forms.principal) <= 0.0:
        raise PreconditionError("flow steps need a locally strictly convex surface")
    new_surface = advance(state, h, dt)
    forms = hyperbolic_forms(new_surface)
    max_shape = float(np.max(forms.shape_norm))
    if not np.isfinite(max_shape) or max_shape > curvature_cap:
        raise BlowUpError("curvature exceeded the cap", details={"max_A": max_shape, "cap": curvature_cap})
    return make_state(new_surface, h, state.time + dt, state.step + 1, forms, with_inradius=with_inradius)


# -- admission and monitors --------------------------------------------------------


def pinching_energy_factor(n: int, alpha: float) -> float:
    """Largest Lambda / H^2 allowed when lambda_1 >= alpha H."""
    return (alpha**2 + (n - alpha) ** 2 / (n - 1)) / n


def admit(surface: RadialGraph, pinching: float = 0.5) -> FundamentalForms:
    """Gate a starting surface: convex, pinched (n >= 2) and outradius below the optimal radius."""
    try:
        forms = hyperbolic_forms(surface)
    except DegeneracyError as error:
        raise AdmissionError("initial surface is degenerate", details=error.details) from error
    failures = {}
    min_curvature = float(np.min(forms.principal))
    if min_curvature <= 0.0:
        failures["convexity"] = min_curvature
    if surface.n >= 2:
        ratio = float(np.min(forms.principal[..., 0] / forms.mean_curvature))
        if ratio <= pinching:
            failures["pinching"] = ratio
    radius = enclosing_ball(surface).radius
    if radius >= OPTIMAL_OUTRADIUS:
        failures["outradius"] = radius
    if failures:
        raise AdmissionError("initial surface rejected", details=failures)
    logger.info("admitted surface: min lambda=%.6g outradius=%.6g", min_curvature, radius)
    return forms


def invariant_monitors(
    state: FlowState,
    h: ForcingField,
    pinching: float = 0.5,
    curvature_bound: Optional[float] = None,
    advisory: bool = True,
) -> List[Violation]:
    forms = state.forms
    n = state.surface.n
    found: List[Violation] = []

    def report(kind: ViolationKind, value: float, threshold: float, message: str, severity: Severity) -> None:
        found.append(
            Violation(
                kind=kind,
                severity=severity,
                value=value,
                threshold=threshold,
                message=message,
                step=state.step,
                time=state.time,
            )
        )

    min_curvature = float(np.min(forms.principal))
    if min_curvature <= 0.0:
        report(ViolationKind.CONVEXITY_LOST, min_curvature, 0.0, "principal curvature not positive", Severity.VIOLATION)
    if n >= 2:
        ratio = float(np.min(forms.principal[..., 0] / forms.mean_curvature))
        if ratio <= pinching:
            report(ViolationKind.PINCHING_LOST, ratio, pinching, "lambda_1 / H at or below alpha", Severity.VIOLATION)
        factor = pinching_energy_factor(n, pinching)
        excess = forms.mean_square - factor * forms.mean_curvature**2
        worst = float(np.max(excess / forms.mean_curvature**2))
        if worst > PINCHING_TOLERANCE:
            report(
                ViolationKind.PINCHING_ENERGY, worst + factor, factor, "Lambda / H^2 above bound", Severity.VIOLATION
            )
    max_shape = float(np.max(forms.shape_norm))
    if curvature_bound is not None and max_shape > curvature_bound:
        report(ViolationKind.CURVATURE_BOUND, max_shape, curvature_bound, "|A| above bound", Severity.VIOLATION)

    if advisory:
        diagnostics = state.diagnostics
        if diagnostics.outradius >= OPTIMAL_OUTRADIUS:
            report(
                ViolationKind.OUTRADIUS_LIMIT,
                diagnostics.outradius,
                OPTIMAL_OUTRADIUS,
                "outradius reached the optimal radius",
                Severity.ADVISORY,
            )
        if h.bounds.h_min > 1.0:
            r_min, r_max = confinement_radii(h)
            if diagnostics.inradius is not None and diagnostics.inradius > r_max + 1e-9:
                report(
                    ViolationKind.INSCRIBED_BALL,
                    diagnostics.inradius,
                    r_max,
                    "contains a ball larger than arcoth(h_min); the flow expands",
                    Severity.ADVISORY,
                )
            if diagnostics.outradius < r_min - 1e-9:
                report(
                    ViolationKind.ENCLOSING_BALL,
                    diagnostics.outradius,
                    r_min,
                    "inside a ball smaller than arcoth(h_max); the flow extinguishes",
                    Severity.ADVISORY,
                )
    return found


# -- runs -------------------------------------------------------------------------------


def _record(state: FlowState, dt: float) -> StepRecord:
    d = state.diagnostics
    return StepRecord(
        step=state.step,
        t=state.time,
        dt=dt,
        V=d.modified_volume,
        H_min=d.mean_curvature_min,
        H_max=d.mean_curvature_max,
        pinch=d.pinching_ratio,
        outradius=d.outradius,
        inradius=d.inradius,
        maxA=d.max_shape_norm,
        residual=d.residual,
    )


def run(
    initial: RadialGraph,
    h: ForcingField,
    controls: Optional[IntegratorControls] = None,
    on_step: Optional[Callable[[FlowState], None]] = None,
) -> TrajectoryLog:
    """Integrate from an admitted surface until a termination condition holds."""
    controls = controls or IntegratorControls()
    forms = admit(initial, controls.pinching)
    state = make_state(initial, h, forms=forms)
    tol_stationary = controls.tol_stationary or 1e-7 * h.bounds.h_max
    log = TrajectoryLog(records=[_record(state, 0.0)], snapshots=[Snapshot(0, 0.0, initial)])
    violations: List[Violation] = [
        v
        for v in invariant_monitors(state, h, controls.pinching, controls.curvature_bound)
        if v.severity == "violation"
    ]
    quiet = 1 if state.diagnostics.residual < tol_stationary else 0
    reason: Optional[TerminationReason] = None
    message = ""

    while reason is None:
        if quiet >= controls.stationary_window:
            reason, message = TerminationReason.CONVERGED, "residual below tolerance for the whole window"
            break
        if state.step >= controls.max_steps:
            reason, message = TerminationReason.STEP_LIMIT, "step limit reached"
            break
        if controls.t_max is not None and state.time >= controls.t_max * (1.0 - 1e-14):
            reason, message = TerminationReason.STEP_LIMIT, "time horizon reached"
            break

        dt = stable_dt(state, h, controls)
        if controls.t_max is not None:
            dt = min(dt, controls.t_max - state.time)
        with_inradius = (state.step + 1) % controls.radii_every == 0
        try:
            new_state = step(state, h, dt, controls.curvature_cap, with_inradius=with_inradius)
        except BlowUpError as error:
            shrinking = state.diagnostics.mean_curvature_min > h.bounds.h_max
            reason = TerminationReason.EXTINCTION if shrinking else TerminationReason.BLOW_UP
            message = error.message
            break
        except (DegeneracyError, DomainError, EstimationError, np.linalg.LinAlgError) as error:
            if state.diagnostics.mean_curvature_min > h.bounds.h_max:
                reason, message = TerminationReason.EXTINCTION, str(error)
            else:
                reason, message = TerminationReason.DEGENERACY, str(error)
            break

        slack = controls.monotonicity_constant * dt**2 + controls.monotonicity_floor
        increase = new_state.diagnostics.modified_volume - state.diagnostics.modified_volume
        if increase > slack:
            violation = Violation(
                kind=ViolationKind.VOLUME_INCREASE,
                value=increase,
                threshold=slack,
                message="modified volume increased",
                step=new_state.step,
                time=new_state.time,
            )
            violations.append(violation)
            logger.warning(
                "monitor: %s at step %d (%.3g > %.3g)", violation.kind.value, new_state.step, increase, slack
            )

        for violation in invariant_monitors(new_state, h, controls.pinching, controls.curvature_bound, advisory=False):
            violations.append(violation)
            logger.warning("monitor: %s at step %d: %s", violation.kind.value, new_state.step, violation.message)

        state = new_state
        log.records.append(_record(state, dt))
        if state.step % controls.snapshot_every == 0:
            log.snapshots.append(Snapshot(state.step, state.time, state.surface))
        if on_step is not None:
            on_step(state)
        if state.step % 500 == 0:
            logger.info(
                "step %d t=%.6g V=%.12g residual=%.3g", state.step, state.time, state.diagnostics.modified_volume,
                state.diagnostics.residual,
            )

        quiet = quiet + 1 if state.diagnostics.residual < tol_stationary else 0
        if float(np.max(state.surface.rho)) < controls.extinction_radius:
            reason, message = TerminationReason.EXTINCTION, "surface shrank below the extinction radius"
        elif float(np.max(np.linalg.norm(state.forms.position, axis=-1))) >= np.tanh(OPTIMAL_OUTRADIUS):
            if state.diagnostics.outradius >= OPTIMAL_OUTRADIUS:
                reason, message = TerminationReason.OUTRADIUS_BREACH, "outradius reached the optimal radius"

    if not log.snapshots or log.snapshots[-1].step != state.step:
        log.snapshots.append(Snapshot(state.step, state.time, state.surface))
    log.termination = TerminationRecord(
        reason=reason, step=state.step, t=state.time, message=message, violations=violations
    )
    logger.info("run terminated: %s after %d steps (t=%.6g)", reason.value, state.step, state.time)
    return log


# -- evolution identities ------------------------------------------------------------


def _frame_norm(tensor: np.ndarray, metric: np.ndarray) -> np.ndarray:
    """Frobenius norm of a (1,1) tensor in an orthonormal frame."""
    lower = np.linalg.cholesky(metric)
    upper = np.swapaxes(lower, -1, -2)
    framed = upper @ tensor @ np.linalg.inv(upper)
    return np.sqrt(np.sum(framed**2, axis=(-2, -1)))


def _consecutive_pairs(log: TrajectoryLog, max_dt: Optional[float]) -> List[Tuple[Snapshot, Snapshot]]:
    snapshots = log.snapshots
    if len(snapshots) < 2:
        raise DenserLogRequired("need at least two snapshots", details={"snapshots": len(snapshots)})
    pairs = []
    for first, second in zip(snapshots, snapshots[1:]):
        spacing = second.time - first.time
        if spacing <= 0.0:
            continue
        if second.step - first.step != 1 and (max_dt is None or spacing > max_dt):
            raise DenserLogRequired(
                "snapshots are not consecutive steps",
                details={"from_step": first.step, "to_step": second.step, "spacing": spacing},
            )
        pairs.append((first, second))
    return pairs


def _tangential_drift(forms: FundamentalForms, rate: np.ndarray) -> np.ndarray:
    """Coordinate components tau^k of the tangential part of the ray velocity."""
    velocity = rate[..., None] * forms.surface.grid.directions
    ambient = metric_tensor(forms.position)
    lowered = np.stack(
        [np.einsum("...a,...ab,...b->...", velocity, ambient, forms.tangents[j]) for j in range(forms.surface.n)],
        axis=-1,
    )
    return np.einsum("...ij,...j->...i", forms.inverse_metric, lowered)


def evolution_residuals(log: TrajectoryLog, h: ForcingField, max_dt: Optional[float] = None) -> EvolutionResidualReport:
    """Residuals of the curvature evolution identities by forward time differences."""
    pairs = []
    for first, second in _consecutive_pairs(log, max_dt):
        dt = second.time - first.time
        forms0 = hyperbolic_forms(first.surface)
        forms1 = hyperbolic_forms(second.surface)
        grid = first.surface.grid
        n = grid.n
        gamma = christoffel_symbols(forms0)
        speed = normal_speed(forms0, h)
        tau = _tangential_drift(forms0, (second.surface.rho - first.surface.rho) / dt)

        mean0 = forms0.mean_curvature
        mean_rate = (forms1.mean_curvature - mean0) / dt - np.einsum("...k,...k->...", tau, grid.gradient(mean0))
        h_hessian = restricted_hessian(h, first.surface, forms0)
        h_laplacian = np.einsum("...ij,...ij->...", forms0.inverse_metric, h_hessian)
        trace = (
            mean_rate
            - laplacian(mean0, forms0, gamma) / n
            - (1.0 - forms0.mean_square) * speed
            + h_laplacian / n
        )

        tensor_residual = None
        if n == 2:
            shape0 = forms0.shape_operator
            d_shape = np.empty(shape0.shape + (n,))
            d_tau = np.empty(tau.shape + (n,))
            for i in range(n):
                d_tau[..., i, :] = grid.gradient(tau[..., i], parity=grid.component_parity(i))
                for j in range(n):
                    d_shape[..., i, j, :] = grid.gradient(shape0[..., i, j], parity=grid.component_parity(i, j))
            lie = (
                np.einsum("...k,...ijk->...ij", tau, d_shape)
                - np.einsum("...kj,...ik->...ij", shape0, d_tau)
                + np.einsum("...ik,...kj->...ij", shape0, d_tau)
            )
            shape_rate = (forms1.shape_operator - shape0) / dt - lie
            speed_hessian = h_hessian - covariant_hessian(mean0, forms0, gamma)
            identity = np.eye(n)
            target = (identity - shape0 @ shape0) * speed[..., None, None] - forms0.inverse_metric @ speed_hessian
            tensor_residual = float(np.max(_frame_norm(shape_rate - target, forms0.metric)))

        pairs.append(
            ResidualPair(
                t=first.time,
                dt=dt,
                trace_residual=float(np.max(np.abs(trace))),
                tensor_residual=tensor_residual,
                scale=float(np.max(np.abs(mean_rate))),
            )
        )
    tensors = [pair.tensor_residual for pair in pairs if pair.tensor_residual is not None]
    return EvolutionResidualReport(
        pairs=pairs,
        max_trace_residual=max(pair.trace_residual for pair in pairs),
        max_tensor_residual=max(tensors) if tensors else None,
    )


def dissipation_audit(log: TrajectoryLog, h: ForcingField, max_dt: Optional[float] = None) -> DissipationReport:
    """Compare the difference quotient of V with -integral of (h - H)^2, averaged over both ends."""

    def dissipation_at(surface: RadialGraph) -> Tuple[float, float]:
        forms = hyperbolic_forms(surface)
        speed = normal_speed(forms, h)
        return modified_volume(surface, h, forms), -surface.grid.integrate(speed**2 * forms.area_density())

    pairs = []
    worst = 0.0
    for first, second in _consecutive_pairs(log, max_dt):
        dt = second.time - first.time
        volume0, dissipation0 = dissipation_at(first.surface)
        volume1, dissipation1 = dissipation_at(second.surface)
        rate = (volume1 - volume0) / dt
        dissipation = 0.5 * (dissipation0 + dissipation1)
        pairs.append(DissipationPair(t=first.time, dt=dt, volume_rate=rate, dissipation=dissipation))
        worst = max(worst, abs(rate - dissipation) / max(abs(dissipation), 1e-300))
    return DissipationReport(pairs=pairs, max_relative_error=worst)


# -- point selection --------------------------------------------------------------


@dataclass(frozen=True)
class FiniteMetricSpace:
    distances: np.ndarray

    def __post_init__(self) -> None:
        d = np.asarray(self.distances, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise PreconditionError("distance matrix must be square")
        if np.any(d < 0.0) or not np.allclose(d, d.T):
            raise PreconditionError("distance matrix must be symmetric and nonnegative")
        object.__setattr__(self, "distances", d)

    @classmethod
    def from_points(cls, points: np.ndarray) -> "FiniteMetricSpace":
        points = np.asarray(points, dtype=float)
        return cls(np.linalg.norm(points[:, None, :] - points[None, :, :], axis=-1))

    @classmethod
    def hyperbolic(cls, points: np.ndarray) -> "FiniteMetricSpace":
        points = np.asarray(points, dtype=float)
        return cls(distance_array(points[:, None, :], points[None, :, :]))

    def __len__(self) -> int:
        return int(self.distances.shape[0])


def _selection_radius(eps: float, value: float) -> float:
    return eps / (2.0 * np.sqrt(value))


def _walk(space: FiniteMetricSpace, p: int, eps: float, f: np.ndarray) -> Tuple[int, int]:
    f = np.asarray(f, dtype=float)
    if f[p] < 1.0:
        raise PreconditionError("selection needs f(p) >= 1", details={"f_p": float(f[p])})
    q, jumps = p, 0
    while True:
        inside = space.distances[q] < _selection_radius(eps, f[q])
        candidates = np.flatnonzero(inside & (f > 4.0 * f[q]))
        if candidates.size == 0:
            return q, jumps
        q = int(candidates[np.argmax(f[candidates])])
        jumps += 1


def lambda_max_principle_select(space: FiniteMetricSpace, p: int, eps: float, f: Sequence[float]) -> int:
    """Point of controlled growth near p: jump while a nearby value exceeds four times the current one."""
    q, jumps = _walk(space, p, eps, np.asarray(f, dtype=float))
    logger.debug("selector moved from %d to %d in %d jumps", p, q, jumps)
    return q


def verify_selection(space: FiniteMetricSpace, p: int, eps: float, f: Sequence[float], q: int) -> SelectionCheck:
    values = np.asarray(f, dtype=float)
    radius = _selection_radius(eps, values[q])
    ball = space.distances[q] < radius
    _, jumps = _walk(space, p, eps, values)
    return SelectionCheck(
        start=p,
        selected=q,
        jumps=jumps,
        value_grows=bool(values[q] >= values[p]),
        ball_contained=bool(np.all(space.distances[p][ball] < eps)),
        locally_bounded=bool(np.all(values[ball] <= 4.0 * values[q])),
    )


def select_curvature_concentration(
    forms: FundamentalForms, eps: float, start: Optional[int] = None
) -> Tuple[int, SelectionCheck]:
    """Apply the selector to |A|^2 / min |A|^2 over the nodes with hyperbolic distances."""
    squared = (forms.shape_norm**2).ravel()
    values = squared / np.min(squared)
    space = FiniteMetricSpace.hyperbolic(forms.position.reshape(-1, forms.surface.n + 1))
    p = int(np.argmax(values)) if start is None else start
    q = lambda_max_principle_select(space, p, eps, values)
    return q, verify_selection(space, p, eps, values, q)


# -- barrier spheres ----------------------------------------------------------------


def sphere_radius_ode(radius: float, h: float, times: Sequence[float]) -> np.ndarray:
    """Hyperbolic radius of a centered sphere under constant forcing, R' = h - coth R."""
    times = np.asarray(times, dtype=float)
    solution = integrate.solve_ivp(
        lambda t, y: h - 1.0 / np.tanh(y),
        (float(times[0]), float(times[-1])),
        [radius],
        method="DOP853",
        t_eval=times,
        rtol=1e-12,
        atol=1e-14,
    )
    if not solution.success:
        raise DomainError("sphere ODE integration failed", details={"message": solution.message})
    return solution.y[0]


def sphere_extinction_time(radius: float, h: float) -> float:
    """Time for a centered sphere starting below arcoth(h) to shrink to a point."""
    if 1.0 / np.tanh(radius) <= h:
        raise PreconditionError("sphere does not shrink", details={"radius": radius, "h": h})
    value, _ = integrate.quad(lambda r: 1.0 / (1.0 / np.tanh(r) - h) if r > 0 else 0.0, 0.0, radius, limit=200)
    return float(value)
