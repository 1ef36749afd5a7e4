import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from hypflow.core.error_handling import ConfigurationError, DomainError
from hypflow.core.kleinian import arccoth, christoffel_correction_array, inverse_metric_tensor, metric_tensor
from hypflow.models.models import ForcingBounds, ForcingKind
from hypflow.schemas.experiment import ForcingSpec
from hypflow.schemas.reports import BoundsCheck, ClassHReport
from hypflow.services.hypersurface import FundamentalForms, RadialGraph, hyperbolic_forms

logger = logging.getLogger(__name__)

DEFAULT_WORKING_RADIUS = 1.0 / np.sqrt(3.0)
BOUND_SLACK = 0.01


@dataclass(frozen=True)
class ForcingField:
    """Prescribed mean curvature h on the ball.

    ``value`` accepts complex coordinates so that curvature residuals can be
    differentiated by complex steps.
    """

    kind: ForcingKind
    base: float
    amplitude: float = 0.0
    width: float = 1.0
    center: np.ndarray = field(default_factory=lambda: np.zeros(0))
    wavevector: np.ndarray = field(default_factory=lambda: np.zeros(0))
    phase: float = 0.0
    working_radius: float = DEFAULT_WORKING_RADIUS
    declared: Optional[ForcingBounds] = None

    def __post_init__(self) -> None:
        if not 0.0 < self.working_radius < 1.0:
            raise ConfigurationError("working radius must lie in (0, 1)", details={"value": self.working_radius})
        if self.declared is None:
            object.__setattr__(self, "declared", self._analytic_bounds())

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, value: float, declared: Optional[ForcingBounds] = None) -> "ForcingField":
        return cls(ForcingKind.CONSTANT, float(value), declared=declared)

    @classmethod
    def radial_bump(
        cls,
        base: float,
        amplitude: float,
        width: float,
        center: np.ndarray,
        working_radius: float = DEFAULT_WORKING_RADIUS,
    ) -> "ForcingField":
        """base + amplitude * exp(-|x - center|^2 / (2 width^2)) in Kleinian coordinates."""
        return cls(
            ForcingKind.RADIAL_BUMP,
            float(base),
            amplitude=float(amplitude),
            width=float(width),
            center=np.asarray(center, dtype=float),
            working_radius=working_radius,
        )

    @classmethod
    def harmonic_perturbation(
        cls,
        base: float,
        amplitude: float,
        wavevector: np.ndarray,
        phase: float = 0.0,
        working_radius: float = DEFAULT_WORKING_RADIUS,
    ) -> "ForcingField":
        """base + amplitude * cos(k . x + phase)."""
        return cls(
            ForcingKind.HARMONIC_PERTURBATION,
            float(base),
            amplitude=float(amplitude),
            wavevector=np.asarray(wavevector, dtype=float),
            phase=float(phase),
            working_radius=working_radius,
        )

    @classmethod
    def from_spec(cls, spec: ForcingSpec, dimension: int) -> "ForcingField":
        declared = ForcingBounds(**spec.declared.model_dump()) if spec.declared else None
        if spec.type is ForcingKind.CONSTANT:
            return cls.constant(spec.base, declared=declared)
        if spec.type is ForcingKind.RADIAL_BUMP:
            center = np.zeros(dimension) if spec.center is None else np.asarray(spec.center, dtype=float)
            if center.shape != (dimension,):
                raise ConfigurationError("bump center has the wrong dimension", details={"center": spec.center})
            field_ = cls.radial_bump(spec.base, spec.amplitude, spec.width, center, spec.working_radius)
        else:
            if spec.wavevector is None or len(spec.wavevector) != dimension:
                raise ConfigurationError("wavevector missing or of the wrong dimension")
            field_ = cls.harmonic_perturbation(
                spec.base, spec.amplitude, np.asarray(spec.wavevector), spec.phase, spec.working_radius
            )
        if declared is not None:
            object.__setattr__(field_, "declared", declared)
        return field_

    # -- evaluation ----------------------------------------------------------

    def value(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points)
        if self.kind is ForcingKind.CONSTANT:
            return np.full(points.shape[:-1], self.base)
        if self.kind is ForcingKind.RADIAL_BUMP:
            offset = points - self.center
            return self.base + self.amplitude * np.exp(-np.sum(offset * offset, axis=-1) / (2.0 * self.width**2))
        return self.base + self.amplitude * np.cos(points @ self.wavevector + self.phase)

    def gradient(self, points: np.ndarray) -> np.ndarray:
        """Euclidean differential Dh, shape (..., d)."""
        points = np.asarray(points, dtype=float)
        if self.kind is ForcingKind.CONSTANT:
            return np.zeros_like(points)
        if self.kind is ForcingKind.RADIAL_BUMP:
            offset = points - self.center
            bump = self.amplitude * np.exp(-np.sum(offset**2, axis=-1) / (2.0 * self.width**2))
            return -(bump / self.width**2)[..., None] * offset
        return -self.amplitude * np.sin(points @ self.wavevector + self.phase)[..., None] * self.wavevector

    def hessian(self, points: np.ndarray) -> np.ndarray:
        """Euclidean second differential D^2 h, shape (..., d, d)."""
        points = np.asarray(points, dtype=float)
        d = points.shape[-1]
        if self.kind is ForcingKind.CONSTANT:
            return np.zeros(points.shape + (d,))
        if self.kind is ForcingKind.RADIAL_BUMP:
            offset = points - self.center
            bump = self.amplitude * np.exp(-np.sum(offset**2, axis=-1) / (2.0 * self.width**2))
            outer = offset[..., :, None] * offset[..., None, :] / self.width**4
            return bump[..., None, None] * (outer - np.eye(d) / self.width**2)
        k = self.wavevector
        return -self.amplitude * np.cos(points @ k + self.phase)[..., None, None] * np.outer(k, k)

    def hyperbolic_hessian(self, points: np.ndarray) -> np.ndarray:
        """Hess^g h = D^2 h - dh(Omega(., .)) as a matrix."""
        points = np.asarray(points, dtype=float)
        gradient = self.gradient(points)
        one = 1.0 - np.sum(points**2, axis=-1)
        correction = points[..., :, None] * gradient[..., None, :] + gradient[..., :, None] * points[..., None, :]
        return self.hessian(points) - correction / one[..., None, None]

    # -- bounds ---------------------------------------------------------------

    def _analytic_bounds(self) -> ForcingBounds:
        r_work = self.working_radius
        if self.kind is ForcingKind.CONSTANT:
            return ForcingBounds(h_min=self.base, h_max=self.base, gradient=0.0, hessian=0.0)
        amplitude = abs(self.amplitude)
        if self.kind is ForcingKind.RADIAL_BUMP:
            gradient = amplitude / (self.width * np.sqrt(np.e))
            second = amplitude / self.width**2
            far = np.exp(-((r_work + np.linalg.norm(self.center)) ** 2) / (2.0 * self.width**2))
            near = 1.0 if np.linalg.norm(self.center) <= r_work else np.exp(
                -((np.linalg.norm(self.center) - r_work) ** 2) / (2.0 * self.width**2)
            )
            values = (self.base + self.amplitude * far, self.base + self.amplitude * near)
            h_min, h_max = min(values), max(values)
        else:
            k = float(np.linalg.norm(self.wavevector))
            gradient = amplitude * k
            second = amplitude * k**2
            h_min, h_max = self.base - amplitude, self.base + amplitude
        return ForcingBounds(
            h_min=float(h_min),
            h_max=float(h_max),
            gradient=float(gradient),
            hessian=float(second + 2.0 * r_work * gradient),
        )

    @property
    def bounds(self) -> ForcingBounds:
        assert self.declared is not None
        return self.declared


def sample_working_region(dimension: int, working_radius: float, count: int = 4000, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    directions = rng.normal(size=(count, dimension))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = working_radius * rng.uniform(size=count) ** (1.0 / dimension)
    return directions * radii[:, None]


def measured_norms(h: ForcingField, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Pointwise hyperbolic norms of dh and of Hess^g h (operator norm relative to g)."""
    gradient = h.gradient(points)
    gradient_norm = np.sqrt(np.einsum("...a,...ab,...b->...", gradient, inverse_metric_tensor(points), gradient))
    lower = np.linalg.cholesky(metric_tensor(points))
    half = np.linalg.solve(lower, h.hyperbolic_hessian(points))
    whitened = np.linalg.solve(lower, np.swapaxes(half, -1, -2))
    hessian_norm = np.max(np.abs(np.linalg.eigvalsh(0.5 * (whitened + np.swapaxes(whitened, -1, -2)))), axis=-1)
    return gradient_norm, hessian_norm


def verify_bounds(h: ForcingField, dimension: int, count: int = 4000, seed: int = 0) -> BoundsCheck:
    """Spot-check the declared bounds on random points of the working region."""
    points = sample_working_region(dimension, h.working_radius, count, seed)
    values = h.value(points)
    gradient_norm, hessian_norm = measured_norms(h, points)
    declared = h.bounds
    slack_low = declared.h_min - BOUND_SLACK * abs(declared.h_min)
    slack_high = declared.h_max + BOUND_SLACK * abs(declared.h_max)
    return BoundsCheck(
        sampled_h_min=float(np.min(values)),
        sampled_h_max=float(np.max(values)),
        sampled_gradient=float(np.max(gradient_norm)),
        sampled_hessian=float(np.max(hessian_norm)),
        holds=bool(
            np.min(values) >= slack_low
            and np.max(values) <= slack_high
            and np.max(gradient_norm) <= declared.gradient * (1.0 + BOUND_SLACK) + 1e-12
            and np.max(hessian_norm) <= declared.hessian * (1.0 + BOUND_SLACK) + 1e-12
        ),
    )


def coth_threshold(n: int) -> float:
    """Lower bound on h from the optimal inscribed radius."""
    optimal = np.sqrt(8.0 / 27.0) / ((n + 1) * (n + 2))
    return float(1.0 / np.tanh(optimal))


def in_class_H(h: ForcingField, n: int) -> ClassHReport:
    bounds = h.bounds
    threshold = coth_threshold(n)
    curvature_margin = bounds.h_min - threshold
    gradient_margin = bounds.h_min**2 - (6.0 * bounds.gradient + 10.0)
    hessian_margin = 6.0 - bounds.hessian / bounds.h_min if bounds.h_min > 0 else -np.inf
    member = curvature_margin > 0 and gradient_margin > 0 and hessian_margin > 0
    logger.debug(
        "class H margins: curvature=%g gradient=%g hessian=%g", curvature_margin, gradient_margin, hessian_margin
    )
    return ClassHReport(
        member=bool(member),
        coth_threshold=threshold,
        curvature_margin=float(curvature_margin),
        gradient_margin=float(gradient_margin),
        hessian_margin=float(hessian_margin),
        above_two=bool(bounds.h_min > 2.0),
        epsilon=float(bounds.h_min / 2.0 - 1.0),
    )


def confinement_radii(h: ForcingField) -> Tuple[float, float]:
    """(r_min, r_max) = (arcoth h_max, arcoth h_min)."""
    bounds = h.bounds
    if bounds.h_min <= 1.0:
        raise DomainError("confinement radii need h_min > 1", details={"h_min": bounds.h_min})
    return arccoth(bounds.h_max), arccoth(bounds.h_min)


def restricted_hessian(h: ForcingField, s: RadialGraph, forms: Optional[FundamentalForms] = None) -> np.ndarray:
    """Second covariant derivatives h_{;ij} of h restricted to the surface, shape (*grid, n, n)."""
    forms = forms or hyperbolic_forms(s)
    x = forms.position
    tangents = forms.tangents
    gradient = h.gradient(x)
    ambient_hessian = h.hessian(x)
    normal_derivative = np.sum(gradient * forms.normal, axis=-1)
    n = s.n
    result = np.empty(x.shape[:-1] + (n, n))
    for i in range(n):
        for j in range(i, n):
            second = np.einsum("...a,...ab,...b->...", tangents[i], ambient_hessian, tangents[j])
            connection = np.sum(gradient * christoffel_correction_array(x, tangents[i], tangents[j]), axis=-1)
            entry = second - connection - normal_derivative * forms.second_form[..., i, j]
            result[..., i, j] = entry
            result[..., j, i] = entry
    return result
