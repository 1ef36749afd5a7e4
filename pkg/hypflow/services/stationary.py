"""
Stationary surfaces H = h and their linearization.

Residual Jacobians are formed column by column with complex steps, which are
exact to rounding; the Newton unknown is the reciprocal radius w = 1 / rho,
in which the residual of a centered sphere is affine.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg

from hypflow.core.error_handling import ConvergenceError, DegeneracyError, DomainError
from hypflow.core.kleinian import distance_array
from hypflow.schemas.experiment import ForcingSpec, StationaryControls
from hypflow.schemas.reports import NondegeneracyReport, StationaryReport
from hypflow.services.flow_engine import admit
from hypflow.services.forcing import ForcingField
from hypflow.services.hypersurface import (
    RadialGraph,
    hyperbolic_forms,
    mean_curvature_field,
    modified_volume,
)

logger = logging.getLogger(__name__)

COMPLEX_STEP = 1e-30
SUFFICIENT_DECREASE = 1e-4
REPORTED_EIGENVALUES = 10
# translation modes of constant forcing are left to the minimum-norm solution
LSTSQ_CUTOFF = 1e-10


def residual(s: RadialGraph, h: ForcingField) -> np.ndarray:
    """H - h at the nodes, flattened."""
    mean, positions = mean_curvature_field(s.grid, s.rho, s.center)
    return (mean - h.value(positions)).ravel()


def residual_jacobian(s: RadialGraph, h: ForcingField) -> Tuple[np.ndarray, np.ndarray]:
    """(F, dF/drho) for F = H - h, one complex step per node."""
    rho = s.rho.astype(complex).ravel()
    size = rho.size
    jacobian = np.empty((size, size))
    for j in range(size):
        probe = rho.copy()
        probe[j] += 1j * COMPLEX_STEP
        mean, positions = mean_curvature_field(s.grid, probe.reshape(s.grid.shape), s.center)
        jacobian[:, j] = (mean - h.value(positions)).imag.ravel() / COMPLEX_STEP
    return residual(s, h), jacobian


@dataclass(frozen=True)
class NewtonResult:
    surface: RadialGraph
    residual: float
    iterations: int
    history: List[float] = field(default_factory=list)


def _trial(s: RadialGraph, reciprocal: np.ndarray, h: ForcingField) -> Optional[Tuple[RadialGraph, np.ndarray]]:
    """Candidate iterate, or None when it leaves the convex class."""
    if np.any(reciprocal <= 1.0):
        return None
    try:
        candidate = s.with_rho((1.0 / reciprocal).reshape(s.grid.shape))
        forms = hyperbolic_forms(candidate)
    except (DegeneracyError, DomainError):
        return None
    if np.min(forms.principal) <= 0.0:
        return None
    return candidate, residual(candidate, h)


def newton_solve(
    initial: RadialGraph, h: ForcingField, controls: Optional[StationaryControls] = None
) -> NewtonResult:
    controls = controls or StationaryControls()
    surface = initial
    values = residual(surface, h)
    norm = float(np.max(np.abs(values)))
    history = [norm]
    iterations = 0
    logger.debug("newton: start residual %.3e", norm)

    while norm >= controls.tol:
        if iterations >= controls.max_iterations:
            raise ConvergenceError(
                "Newton iteration did not converge", details={"iterations": iterations, "residual": norm}
            )
        values, jacobian = residual_jacobian(surface, h)
        rho = surface.rho.ravel()
        # dF/dw = dF/drho * drho/dw with w = 1 / rho
        reciprocal_jacobian = jacobian * (-(rho**2))[None, :]
        update, *_ = linalg.lstsq(reciprocal_jacobian, -values, cond=LSTSQ_CUTOFF)

        damping = 1.0
        while True:
            trial = _trial(surface, 1.0 / rho + damping * update, h)
            if trial is not None:
                new_norm = float(np.max(np.abs(trial[1])))
                if new_norm <= (1.0 - SUFFICIENT_DECREASE * damping) * norm:
                    break
            damping *= 0.5
            if damping < controls.min_damping:
                raise ConvergenceError(
                    "Newton step rejected at minimum damping",
                    details={"iterations": iterations, "residual": norm},
                )
        surface, values = trial
        norm = new_norm
        iterations += 1
        history.append(norm)
        logger.debug("newton: iteration %d residual %.3e damping %.3g", iterations, norm, damping)

    logger.info("stationary surface found after %d Newton steps (residual %.3e)", iterations, norm)
    return NewtonResult(surface=surface, residual=norm, iterations=iterations, history=history)


def solve_stationary(
    initial: RadialGraph, h: ForcingField, tol: float = 1e-10, controls: Optional[StationaryControls] = None
) -> RadialGraph:
    """Newton solve for H = h; the result is admitted into the convex pinched class."""
    controls = (controls or StationaryControls()).model_copy(update={"tol": tol})
    result = newton_solve(initial, h, controls)
    admit(result.surface)
    return result.surface


@dataclass(frozen=True)
class JacobiSystem:
    """Linearization phi -> d/ds (h - H) under the normal variation phi N."""

    surface: RadialGraph
    operator: np.ndarray
    spectrum: Optional[np.ndarray] = None


def jacobi_assemble(s: RadialGraph, h: ForcingField, with_spectrum: bool = True) -> JacobiSystem:
    _, jacobian = residual_jacobian(s, h)
    rates = hyperbolic_forms(s).radial_rate_factor.ravel()
    operator = -jacobian * rates[None, :]
    spectrum = None
    if with_spectrum:
        eigenvalues = linalg.eigvals(operator)
        spectrum = np.sort(eigenvalues.real)[::-1]
    return JacobiSystem(surface=s, operator=operator, spectrum=spectrum)


def nondegeneracy_probe(system: JacobiSystem, kernel_tol: float = 1e-3) -> NondegeneracyReport:
    spectrum = system.spectrum
    if spectrum is None:
        spectrum = np.sort(linalg.eigvals(system.operator).real)[::-1]
    by_size = spectrum[np.argsort(np.abs(spectrum))]
    near_zero = by_size[np.abs(by_size) < kernel_tol]
    logger.info("Jacobi kernel: %d eigenvalues below %.1e", near_zero.size, kernel_tol)
    return NondegeneracyReport(
        kernel_tol=kernel_tol,
        kernel_count=int(near_zero.size),
        near_zero=[float(value) for value in near_zero],
        lowest_eigenvalues=[float(value) for value in by_size[:REPORTED_EIGENVALUES]],
    )


def sphere_jacobi_eigenvalue(degree: int, n: int, radius: float) -> float:
    """Eigenvalue of the round-sphere Jacobi operator on degree-k harmonics."""
    return float(-degree * (degree + n - 1) / (n * np.sinh(radius) ** 2) + 1.0 / np.sinh(radius) ** 2)


def stationary_report(
    result: NewtonResult,
    h: ForcingField,
    forcing: ForcingSpec,
    kernel_tol: float = 1e-3,
    label: Optional[str] = None,
) -> StationaryReport:
    system = jacobi_assemble(result.surface, h)
    probe = nondegeneracy_probe(system, kernel_tol)
    surface = result.surface
    return StationaryReport(
        surface=surface.to_snapshot(),
        forcing=forcing,
        residual=result.residual,
        newton_steps=result.iterations,
        kernel_count=probe.kernel_count,
        lowest_eigenvalues=probe.lowest_eigenvalues,
        mean_radius=float(np.mean(distance_array(surface.center, surface.positions()))),
        modified_volume=modified_volume(surface, h),
        label=label,
    )
