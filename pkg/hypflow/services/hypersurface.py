"""
Closed convex hypersurfaces of the Kleinian ball as radial graphs
X(omega) = c + rho(omega) omega over S^n, and their curvature.

The curvature pipeline computes Euclidean fundamental forms from angular
derivatives of rho and converts them to the hyperbolic reading with

    II^g = II^delta / sqrt((1 - r^2)(1 - <N^delta, x>^2)),

which reduces to II^g = II^delta / (1 - r^2) on centered spheres. Every step
before the eigen-decomposition is written with analytic operations only, so
that mean curvature can be differentiated by complex steps.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Protocol, Sequence, Tuple

import numpy as np
from scipy import optimize, special

from hypflow.core.error_handling import DegeneracyError, DomainError, EstimationError
from hypflow.core.kleinian import (
    BOUNDARY_MARGIN,
    distance_array,
    metric_tensor,
    translate_from_origin,
    translate_to_origin,
    volume_density,
)
from hypflow.core.sphere_grid import MIN_RESOLUTION, SphereGrid
from hypflow.models.models import SurfaceDiagnostics
from hypflow.schemas.records import SurfaceSnapshot

logger = logging.getLogger(__name__)

RADIAL_QUADRATURE_ORDER = 24


class PointFunction(Protocol):
    def value(self, points: np.ndarray) -> np.ndarray: ...


SecondFormFactor = Callable[[np.ndarray, np.ndarray], np.ndarray]


def second_form_factor(r2: np.ndarray, support: np.ndarray) -> np.ndarray:
    """Ratio II^delta / II^g given r^2 and <N^delta, x>."""
    return np.sqrt((1.0 - r2) * (1.0 - support**2))


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # no conjugation: complex-step safe
    return np.sum(a * b, axis=-1)


@dataclass(frozen=True)
class RadialGraph:
    grid: SphereGrid
    rho: np.ndarray
    center: np.ndarray

    def __post_init__(self) -> None:
        rho = np.array(self.rho, dtype=float)
        center = np.array(self.center, dtype=float).reshape(-1)
        if rho.shape != self.grid.shape:
            raise DomainError("rho does not match the grid", details={"shape": list(rho.shape)})
        if center.shape != (self.grid.n + 1,):
            raise DomainError("center has the wrong dimension", details={"center": center.tolist()})
        if min(self.grid.shape) < MIN_RESOLUTION:
            raise DomainError("grid resolution below 16 nodes", details={"shape": list(self.grid.shape)})
        if not np.all(np.isfinite(rho)) or np.any(rho <= 0.0) or np.any(rho >= 1.0):
            raise DomainError("rho must lie in (0, 1) at every node")
        positions = center + rho[..., None] * self.grid.directions
        if np.max(np.linalg.norm(positions, axis=-1)) > 1.0 - BOUNDARY_MARGIN:
            raise DomainError("surface leaves the Kleinian ball", details={"margin": BOUNDARY_MARGIN})
        rho.setflags(write=False)
        center.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "center", center)

    @property
    def n(self) -> int:
        return self.grid.n

    def positions(self) -> np.ndarray:
        return self.center + self.rho[..., None] * self.grid.directions

    def with_rho(self, rho: np.ndarray) -> "RadialGraph":
        return RadialGraph(self.grid, rho, self.center)

    # -- constructors ------------------------------------------------------

    @classmethod
    def sphere(cls, grid: SphereGrid, radius: float, center: Optional[Sequence[float]] = None) -> "RadialGraph":
        """Euclidean sphere of radius ``radius`` about ``center``."""
        c = np.zeros(grid.n + 1) if center is None else np.asarray(center, dtype=float)
        return cls(grid, np.full(grid.shape, float(radius)), c)

    @classmethod
    def geodesic_sphere(
        cls, grid: SphereGrid, radius: float, center: Optional[Sequence[float]] = None
    ) -> "RadialGraph":
        """Geodesic sphere of hyperbolic radius ``radius`` about ``center``, star-shaped about it."""
        c = np.zeros(grid.n + 1) if center is None else np.asarray(center, dtype=float)
        a0 = 1.0 - float(c @ c)
        k = np.cosh(radius) ** 2 * a0
        m = a0 * np.sinh(radius) ** 2
        beta = grid.directions @ c
        quadratic = beta**2 + k
        rho = (-beta * m + np.sqrt(beta**2 * m**2 + quadratic * a0 * m)) / quadratic
        return cls(grid, rho, c)

    @classmethod
    def ellipsoid(
        cls, grid: SphereGrid, axes: Sequence[float], center: Optional[Sequence[float]] = None
    ) -> "RadialGraph":
        c = np.zeros(grid.n + 1) if center is None else np.asarray(center, dtype=float)
        scaled = grid.directions / np.asarray(axes, dtype=float)
        return cls(grid, 1.0 / np.sqrt(np.sum(scaled**2, axis=-1)), c)

    @classmethod
    def perturbed_sphere(
        cls,
        grid: SphereGrid,
        radius: float,
        harmonics: Sequence[Tuple[int, int, float]],
        center: Optional[Sequence[float]] = None,
    ) -> "RadialGraph":
        """rho = radius * (1 + sum amplitude * Y_{degree, order}) with Y normalized to unit max."""
        profile = np.ones(grid.shape)
        for degree, order, amplitude in harmonics:
            profile = profile + amplitude * harmonic(grid, degree, order)
        return cls.sphere(grid, radius, center).with_rho(radius * profile)

    # -- snapshot format ----------------------------------------------------

    def to_snapshot(self, time: Optional[float] = None, step: Optional[int] = None) -> SurfaceSnapshot:
        return SurfaceSnapshot(
            n=self.n,
            grid_shape=list(self.grid.shape),
            stencil=self.grid.stencil,
            rho=self.rho.ravel().tolist(),
            center=self.center.tolist(),
            time=time,
            step=step,
        )

    @classmethod
    def from_snapshot(cls, snapshot: SurfaceSnapshot) -> "RadialGraph":
        grid = SphereGrid(snapshot.n, tuple(snapshot.grid_shape), snapshot.stencil)
        rho = np.array(snapshot.rho, dtype=float).reshape(grid.shape)
        return cls(grid, rho, np.array(snapshot.center, dtype=float))


def harmonic(grid: SphereGrid, degree: int, order: int) -> np.ndarray:
    """Real harmonic of the given degree; negative order selects the sine branch."""
    if grid.n == 1:
        (theta,) = grid.angles
        values = np.cos(degree * theta) if order >= 0 else np.sin(degree * theta)
    else:
        theta, phi = grid.angles
        m = abs(order)
        if m > degree:
            raise DomainError("harmonic order exceeds degree", details={"degree": degree, "order": order})
        legendre = special.lpmv(m, degree, np.cos(theta))
        values = legendre * (np.cos(m * phi) if order >= 0 else np.sin(m * phi))
    scale = np.max(np.abs(values))
    return values / scale if scale > 0 else values


# -- fundamental forms ----------------------------------------------------------


@dataclass(frozen=True)
class EuclideanForms:
    position: np.ndarray
    tangents: np.ndarray
    second_derivatives: np.ndarray
    normal: np.ndarray
    metric: np.ndarray
    second_form: np.ndarray


@dataclass(frozen=True)
class FundamentalForms:
    """Per-node fundamental forms of a radial graph in both metrics."""

    surface: RadialGraph
    euclidean: EuclideanForms
    euclidean_principal: np.ndarray
    metric: np.ndarray
    inverse_metric: np.ndarray
    second_form: np.ndarray
    shape_operator: np.ndarray
    normal: np.ndarray
    normal_norm: np.ndarray
    factor: np.ndarray
    principal: np.ndarray
    mean_curvature: np.ndarray
    mean_square: np.ndarray

    @property
    def position(self) -> np.ndarray:
        return self.euclidean.position

    @property
    def tangents(self) -> np.ndarray:
        return self.euclidean.tangents

    @property
    def shape_norm(self) -> np.ndarray:
        """Hyperbolic norm |A| = sqrt(sum lambda_i^2)."""
        return np.sqrt(np.sum(self.principal**2, axis=-1))

    @property
    def radial_rate_factor(self) -> np.ndarray:
        """d rho / ds for unit hyperbolic normal speed s."""
        x = self.position
        r2 = _dot(x, x)
        omega = self.surface.grid.directions
        return (1.0 - r2) * self.normal_norm / _dot(self.euclidean.normal, omega)

    def area_density(self) -> np.ndarray:
        return np.sqrt(_det(self.metric))


def _det(matrix: np.ndarray) -> np.ndarray:
    if matrix.shape[-1] == 1:
        return matrix[..., 0, 0]
    return matrix[..., 0, 0] * matrix[..., 1, 1] - matrix[..., 0, 1] * matrix[..., 1, 0]


def _inverse(matrix: np.ndarray) -> np.ndarray:
    if matrix.shape[-1] == 1:
        return 1.0 / matrix
    det = _det(matrix)
    inverse = np.empty_like(matrix)
    inverse[..., 0, 0] = matrix[..., 1, 1] / det
    inverse[..., 1, 1] = matrix[..., 0, 0] / det
    inverse[..., 0, 1] = -matrix[..., 0, 1] / det
    inverse[..., 1, 0] = -matrix[..., 1, 0] / det
    return inverse


def _euclidean_geometry(grid: SphereGrid, rho: np.ndarray, center: np.ndarray) -> EuclideanForms:
    n = grid.n
    omega = grid.directions
    d_omega = grid.direction_derivatives
    dd_omega = grid.direction_second_derivatives
    d_rho = [grid.derivative(rho, i) for i in range(n)]

    position = center + rho[..., None] * omega
    tangents = np.stack([d_rho[i][..., None] * omega + rho[..., None] * d_omega[i] for i in range(n)])

    second = np.empty((n, n) + position.shape, dtype=position.dtype)
    for i in range(n):
        for j in range(i, n):
            rho_ij = grid.second_derivative(rho, i, j)
            value = (
                rho_ij[..., None] * omega
                + d_rho[i][..., None] * d_omega[j]
                + d_rho[j][..., None] * d_omega[i]
                + rho[..., None] * dd_omega[i, j]
            )
            second[i, j] = value
            second[j, i] = value

    if n == 1:
        t = tangents[0]
        raw_normal = np.stack([t[..., 1], -t[..., 0]], axis=-1)
    else:
        raw_normal = np.cross(tangents[0], tangents[1])
    normal = raw_normal / np.sqrt(_dot(raw_normal, raw_normal))[..., None]
    if np.any(np.real(_dot(normal, omega)) <= 0.0):
        raise DegeneracyError("surface is not a star-shaped graph about its center")

    metric = np.empty(position.shape[:-1] + (n, n), dtype=position.dtype)
    second_form = np.empty_like(metric)
    for i in range(n):
        for j in range(n):
            metric[..., i, j] = _dot(tangents[i], tangents[j])
            second_form[..., i, j] = -_dot(second[i, j], normal)
    if np.any(np.real(_det(metric)) <= 1e-300):
        raise DegeneracyError("degenerate induced metric (node collision)")
    return EuclideanForms(position, tangents, second, normal, metric, second_form)


def _hyperbolic_parts(
    euclidean: EuclideanForms, factor_fn: SecondFormFactor
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Hyperbolic metric, second form, normal, normal norm and conversion factor."""
    x = euclidean.position
    n = euclidean.metric.shape[-1]
    r2 = _dot(x, x)
    one = 1.0 - r2
    support = _dot(euclidean.normal, x)
    normal_norm = np.sqrt((1.0 - support**2) / one)
    normal = (euclidean.normal - support[..., None] * x) / normal_norm[..., None]
    factor = factor_fn(r2, support)
    second_form = euclidean.second_form / factor[..., None, None]

    metric = np.empty_like(euclidean.metric)
    radial = [_dot(x, euclidean.tangents[i]) for i in range(n)]
    for i in range(n):
        for j in range(n):
            metric[..., i, j] = euclidean.metric[..., i, j] / one + radial[i] * radial[j] / one**2
    return metric, second_form, normal, normal_norm, factor


def _principal(metric: np.ndarray, second_form: np.ndarray) -> np.ndarray:
    """Eigenvalues of metric^-1 second_form via the Cholesky-whitened symmetric problem."""
    try:
        lower = np.linalg.cholesky(metric)
    except np.linalg.LinAlgError as error:
        raise DegeneracyError("induced metric is not positive definite") from error
    half = np.linalg.solve(lower, second_form)
    whitened = np.linalg.solve(lower, np.swapaxes(half, -1, -2))
    whitened = 0.5 * (whitened + np.swapaxes(whitened, -1, -2))
    return np.linalg.eigvalsh(whitened)


def euclidean_forms(s: RadialGraph) -> EuclideanForms:
    return _euclidean_geometry(s.grid, s.rho, s.center)


def euclidean_principal_curvatures(s: RadialGraph, forms: Optional[EuclideanForms] = None) -> np.ndarray:
    forms = forms or euclidean_forms(s)
    return _principal(forms.metric, forms.second_form)


def hyperbolic_forms(
    s: RadialGraph,
    euclidean: Optional[EuclideanForms] = None,
    factor_fn: SecondFormFactor = second_form_factor,
) -> FundamentalForms:
    euclidean = euclidean or euclidean_forms(s)
    metric, second_form, normal, normal_norm, factor = _hyperbolic_parts(euclidean, factor_fn)
    principal = _principal(metric, second_form)
    n = s.n
    inverse = _inverse(metric)
    return FundamentalForms(
        surface=s,
        euclidean=euclidean,
        euclidean_principal=_principal(euclidean.metric, euclidean.second_form),
        metric=metric,
        inverse_metric=inverse,
        second_form=second_form,
        shape_operator=inverse @ second_form,
        normal=normal,
        normal_norm=normal_norm,
        factor=factor,
        principal=principal,
        mean_curvature=np.sum(principal, axis=-1) / n,
        mean_square=np.sum(principal**2, axis=-1) / n,
    )


def mean_curvature_field(grid: SphereGrid, rho: np.ndarray, center: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Hyperbolic mean curvature and node positions; analytic in rho (accepts complex rho)."""
    euclidean = _euclidean_geometry(grid, rho, center)
    metric, second_form, _, _, _ = _hyperbolic_parts(euclidean, second_form_factor)
    trace = np.trace(_inverse(metric) @ second_form, axis1=-2, axis2=-1)
    return trace / grid.n, euclidean.position


# -- intrinsic calculus -------------------------------------------------------------


def christoffel_symbols(forms: FundamentalForms) -> np.ndarray:
    """Gamma^k_ij of the hyperbolic induced metric, shape (*grid, k, i, j)."""
    euclidean = forms.euclidean
    x = euclidean.position
    n = forms.surface.n
    ambient = metric_tensor(x)
    one = 1.0 - _dot(x, x)
    lowered = np.empty(x.shape[:-1] + (n, n, n))
    for i in range(n):
        for j in range(n):
            xi, xj = euclidean.tangents[i], euclidean.tangents[j]
            correction = (_dot(x, xi)[..., None] * xj + _dot(x, xj)[..., None] * xi) / one[..., None]
            covariant = euclidean.second_derivatives[i, j] + correction
            for k in range(n):
                lowered[..., k, i, j] = np.einsum("...a,...ab,...b->...", covariant, ambient, euclidean.tangents[k])
    return np.einsum("...kl,...lij->...kij", forms.inverse_metric, lowered)


def covariant_hessian(values: np.ndarray, forms: FundamentalForms, gamma: Optional[np.ndarray] = None) -> np.ndarray:
    grid = forms.surface.grid
    n = grid.n
    gamma = christoffel_symbols(forms) if gamma is None else gamma
    gradient = grid.gradient(values)
    hessian = np.empty(values.shape + (n, n))
    for i in range(n):
        for j in range(i, n):
            entry = grid.second_derivative(values, i, j) - np.einsum("...k,...k->...", gamma[..., :, i, j], gradient)
            hessian[..., i, j] = entry
            hessian[..., j, i] = entry
    return hessian


def laplacian(values: np.ndarray, forms: FundamentalForms, gamma: Optional[np.ndarray] = None) -> np.ndarray:
    hessian = covariant_hessian(values, forms, gamma)
    return np.einsum("...ij,...ij->...", forms.inverse_metric, hessian)


def codazzi_residual(s: RadialGraph, forms: Optional[FundamentalForms] = None) -> float:
    """Largest metric norm of nabla_k II_ij - nabla_j II_ik over the nodes."""
    if s.n == 1:
        return 0.0
    forms = forms or hyperbolic_forms(s)
    grid = s.grid
    n = s.n
    gamma = christoffel_symbols(forms)
    second = forms.second_form
    d_second = np.empty(second.shape + (n,))
    for i in range(n):
        for j in range(n):
            parity = grid.component_parity(i, j)
            for k in range(n):
                d_second[..., i, j, k] = grid.derivative(second[..., i, j], k, parity=parity)
    # nabla_k II_ij
    covariant = (
        d_second
        - np.einsum("...lki,...lj->...ijk", gamma, second)
        - np.einsum("...lkj,...il->...ijk", gamma, second)
    )
    tensor = covariant - np.swapaxes(covariant, -1, -2)
    g_inv = forms.inverse_metric
    norm2 = np.einsum("...ia,...jb,...kc,...ijk,...abc->...", g_inv, g_inv, g_inv, tensor, tensor)
    return float(np.sqrt(np.max(np.abs(norm2))))


# -- diagnostics -------------------------------------------------------------------


def pinching_ratio(forms: FundamentalForms) -> float:
    return float(np.min(forms.principal[..., 0] / forms.mean_curvature))


@dataclass(frozen=True)
class PinchingCheck:
    holds: np.ndarray
    slack: np.ndarray
    outradius: float

    @property
    def worst_slack(self) -> float:
        return float(np.min(self.slack))

    @property
    def all_hold(self) -> bool:
        return bool(np.all(self.holds))


def pinching_transformation_check(
    s: RadialGraph, forms: Optional[FundamentalForms] = None, tolerance: float = 1e-9
) -> PinchingCheck:
    """Compare Euclidean and hyperbolic principal ratios against cosh^2 of the origin-centred outradius."""
    forms = forms or hyperbolic_forms(s)
    radius = float(np.arctanh(np.max(np.linalg.norm(forms.position, axis=-1))))
    euclidean_ratio = forms.euclidean_principal[..., -1] / forms.euclidean_principal[..., 0]
    hyperbolic_ratio = forms.principal[..., -1] / forms.principal[..., 0]
    slack = np.cosh(radius) ** 2 * hyperbolic_ratio / euclidean_ratio
    return PinchingCheck(holds=slack >= 1.0 - tolerance, slack=slack, outradius=radius)


def gauss_curvature_diagnostics(s: RadialGraph, forms: Optional[FundamentalForms] = None) -> np.ndarray:
    """Sectional curvatures lambda_i lambda_j - 1 for i < j, shape (*grid, n(n-1)/2)."""
    forms = forms or hyperbolic_forms(s)
    n = s.n
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if not pairs:
        return np.empty(s.grid.shape + (0,))
    principal = forms.principal
    return np.stack([principal[..., i] * principal[..., j] - 1.0 for i, j in pairs], axis=-1)


def area(s: RadialGraph, forms: Optional[FundamentalForms] = None) -> float:
    forms = forms or hyperbolic_forms(s)
    return s.grid.integrate(forms.area_density())


def _enclosed_integral(s: RadialGraph, weight: Optional[PointFunction]) -> float:
    nodes, weights = np.polynomial.legendre.leggauss(RADIAL_QUADRATURE_ORDER)
    nodes = 0.5 * (nodes + 1.0)
    weights = 0.5 * weights
    radii = s.rho[..., None] * nodes
    points = s.center + radii[..., None] * s.grid.directions[..., None, :]
    integrand = volume_density(points) * radii**s.n * s.rho[..., None] * weights
    if weight is not None:
        integrand = integrand * weight.value(points)
    if not np.all(np.isfinite(integrand)):
        raise DomainError("volume quadrature failed near the ideal boundary")
    return float(np.sum(s.grid.solid_weights * integrand.sum(axis=-1)))


def enclosed_volume(s: RadialGraph) -> float:
    return _enclosed_integral(s, None)


def modified_volume(s: RadialGraph, h: PointFunction, forms: Optional[FundamentalForms] = None) -> float:
    """Area / n minus the h-weighted enclosed hyperbolic volume."""
    return area(s, forms) / s.n - _enclosed_integral(s, h)


# -- radii --------------------------------------------------------------------------


def _circumsphere(support: List[np.ndarray]) -> Tuple[np.ndarray, float]:
    base = support[0]
    if len(support) == 1:
        return base.copy(), 0.0
    offsets = np.array(support[1:]) - base
    gram = offsets @ offsets.T
    coefficients = np.linalg.lstsq(gram, 0.5 * np.diag(gram), rcond=None)[0]
    center = base + coefficients @ offsets
    return center, float(np.sum((center - base) ** 2))


def _welzl(points: np.ndarray, support: List[np.ndarray], dimension: int) -> Tuple[np.ndarray, float]:
    if support:
        center, radius2 = _circumsphere(support)
    else:
        center, radius2 = points[0].copy(), -1.0
    if len(support) == dimension + 1:
        return center, radius2
    index = 0
    while index < len(points):
        outside = np.flatnonzero(
            np.sum((points[index:] - center) ** 2, axis=1) > radius2 * (1.0 + 1e-12) + 1e-300
        )
        if outside.size == 0:
            break
        index += int(outside[0])
        center, radius2 = _welzl(points[:index], support + [points[index]], dimension)
        index += 1
    return center, radius2


def smallest_enclosing_ball(points: np.ndarray) -> Tuple[np.ndarray, float]:
    """Euclidean minimum enclosing ball (center, radius) of an (m, d) cloud."""
    order = np.random.default_rng(0).permutation(len(points))
    center, radius2 = _welzl(points[order], [], points.shape[1])
    return center, float(np.sqrt(max(radius2, 0.0)))


@dataclass(frozen=True)
class GeodesicBall:
    center: np.ndarray
    radius: float


def enclosing_ball(s: RadialGraph, max_iterations: int = 60, tolerance: float = 1e-12) -> GeodesicBall:
    """Smallest enclosing geodesic ball, by recentering until the Euclidean and hyperbolic balls coincide."""
    current = s.positions().reshape(-1, s.n + 1)
    frames: List[np.ndarray] = []
    best = np.inf
    for iteration in range(max_iterations):
        center, _ = smallest_enclosing_ball(current)
        best = min(best, float(np.arctanh(np.max(np.linalg.norm(current, axis=1)))))
        if np.linalg.norm(center) < tolerance:
            origin = np.zeros(s.n + 1)
            for frame in reversed(frames):
                origin = translate_from_origin(frame, origin)
            logger.debug("enclosing ball converged after %d recenterings", iteration)
            return GeodesicBall(center=origin, radius=best)
        current = translate_to_origin(center, current)
        frames.append(center)
    raise EstimationError(
        "outradius recentering did not converge",
        details={"best_bound": best, "iterations": max_iterations},
    )


def outradius(s: RadialGraph) -> float:
    return enclosing_ball(s).radius


def inscribed_ball(
    s: RadialGraph, forms: Optional[FundamentalForms] = None, start: Optional[np.ndarray] = None
) -> GeodesicBall:
    """Largest geodesic ball inside the support planes at the nodes."""
    forms = forms or hyperbolic_forms(s)
    normals = forms.euclidean.normal.reshape(-1, s.n + 1)
    offsets = np.sum(normals * forms.position.reshape(-1, s.n + 1), axis=1)
    plane_scale = np.sqrt(np.sum(normals**2, axis=1) - offsets**2)

    def sinh_distances(c: np.ndarray) -> np.ndarray:
        return (offsets - normals @ c) / (np.sqrt(1.0 - c @ c) * plane_scale)

    def sinh_jacobian(z: np.ndarray) -> np.ndarray:
        c = z[:-1]
        one = 1.0 - c @ c
        values = sinh_distances(c)
        block = -normals / (np.sqrt(one) * plane_scale)[:, None] + values[:, None] * c / one
        return np.hstack([block, -np.ones((len(values), 1))])

    x0 = np.asarray(s.center if start is None else start, dtype=float)
    sigma0 = float(np.min(sinh_distances(x0)))
    if sigma0 <= 0.0:
        raise EstimationError("inscribed-ball search must start inside the surface", details={"best_bound": 0.0})

    result = optimize.minimize(
        lambda z: -z[-1],
        np.append(x0, sigma0),
        jac=lambda z: np.append(np.zeros(s.n + 1), -1.0),
        constraints=[
            {"type": "ineq", "fun": lambda z: sinh_distances(z[:-1]) - z[-1], "jac": sinh_jacobian},
            {
                "type": "ineq",
                "fun": lambda z: (1.0 - BOUNDARY_MARGIN) ** 2 - z[:-1] @ z[:-1],
                "jac": lambda z: np.append(-2.0 * z[:-1], 0.0),
            },
        ],
        method="SLSQP",
        options={"ftol": 1e-15, "maxiter": 500},
    )
    center = result.x[:-1]
    sigma = float(np.min(sinh_distances(center)))
    if sigma < sigma0:
        center, sigma = x0, sigma0
    if not result.success:
        logger.debug("inscribed-ball optimizer stopped early: %s", result.message)
    return GeodesicBall(center=center, radius=float(np.arcsinh(sigma)))


def inradius(s: RadialGraph, forms: Optional[FundamentalForms] = None) -> float:
    return inscribed_ball(s, forms).radius


# -- resampling ----------------------------------------------------------------


def _contains(s: RadialGraph, point: np.ndarray) -> bool:
    offset = point - s.center
    distance = float(np.linalg.norm(offset))
    if distance == 0.0:
        return True
    return distance < float(s.grid.interpolate(s.rho, offset[None])[0])


def recenter(
    s: RadialGraph, center: Sequence[float], grid: Optional[SphereGrid] = None, iterations: int = 64
) -> RadialGraph:
    """The same surface written as a radial graph about another interior point."""
    grid = grid or s.grid
    c = np.asarray(center, dtype=float)
    if not _contains(s, c):
        raise DomainError("new star center lies outside the surface", details={"center": c.tolist()})
    omega = grid.directions.reshape(-1, grid.n + 1)
    beta = omega @ c
    outer = (1.0 - BOUNDARY_MARGIN) ** 2
    upper = -beta + np.sqrt(beta**2 + outer - c @ c)
    lower = np.zeros_like(upper)

    def gap(t: np.ndarray) -> np.ndarray:
        offset = c + t[:, None] * omega - s.center
        norm = np.linalg.norm(offset, axis=1)
        return norm - s.grid.interpolate(s.rho, offset)

    if np.any(gap(upper) <= 0.0):
        raise DomainError("surface does not separate the new center from the ideal boundary")
    for _ in range(iterations):
        middle = 0.5 * (lower + upper)
        inside = gap(middle) < 0.0
        lower = np.where(inside, middle, lower)
        upper = np.where(inside, upper, middle)
    return RadialGraph(grid, (0.5 * (lower + upper)).reshape(grid.shape), c)


def resample(s: RadialGraph, grid: SphereGrid) -> RadialGraph:
    """Same star center, different grid."""
    rho = s.grid.interpolate(s.rho, grid.directions)
    return RadialGraph(grid, rho, s.center)


def transform_surface(
    s: RadialGraph, translation: Sequence[float], grid: Optional[SphereGrid] = None, iterations: int = 64
) -> RadialGraph:
    """Image of s under the isometry sending ``translation`` to the origin.

    The image is written as a radial graph about the image of the old star center.
    """
    grid = grid or s.grid
    shift = np.asarray(translation, dtype=float)
    new_center = translate_to_origin(shift, s.center[None])[0]
    omega = grid.directions.reshape(-1, grid.n + 1)
    outer = (1.0 - BOUNDARY_MARGIN) ** 2
    beta = omega @ new_center
    upper = -beta + np.sqrt(beta**2 + outer - new_center @ new_center)
    lower = np.zeros_like(upper)

    def gap(t: np.ndarray) -> np.ndarray:
        preimage = translate_from_origin(shift, new_center + t[:, None] * omega)
        offset = preimage - s.center
        return np.linalg.norm(offset, axis=1) - s.grid.interpolate(s.rho, offset)

    for _ in range(iterations):
        middle = 0.5 * (lower + upper)
        inside = gap(middle) < 0.0
        lower = np.where(inside, middle, lower)
        upper = np.where(inside, upper, middle)
    return RadialGraph(grid, (0.5 * (lower + upper)).reshape(grid.shape), new_center)


def surface_distance(a: RadialGraph, b: RadialGraph) -> float:
    """Max hyperbolic displacement along common rays once both enclosing centers sit at the origin."""
    images = []
    for surface in (a, b):
        moved = transform_surface(surface, enclosing_ball(surface).center, grid=a.grid)
        images.append(recenter(moved, np.zeros(surface.n + 1), grid=a.grid))
    return float(np.max(np.abs(np.arctanh(images[0].rho) - np.arctanh(images[1].rho))))


def point_distances(s: RadialGraph) -> np.ndarray:
    """Pairwise hyperbolic distances between the surface nodes."""
    points = s.positions().reshape(-1, s.n + 1)
    return distance_array(points[:, None, :], points[None, :, :])


def node_spacing(forms: FundamentalForms) -> float:
    """Smallest hyperbolic length of a grid edge."""
    grid = forms.surface.grid
    lengths = [np.sqrt(forms.metric[..., i, i]) * grid.spacing[i] for i in range(grid.n)]
    return float(min(np.min(length) for length in lengths))


def diagnose(
    s: RadialGraph,
    h: PointFunction,
    forms: Optional[FundamentalForms] = None,
    with_inradius: bool = True,
    outradius_value: Optional[float] = None,
) -> SurfaceDiagnostics:
    forms = forms or hyperbolic_forms(s)
    h_values = h.value(forms.position)
    surface_area = area(s, forms)
    return SurfaceDiagnostics(
        pinching_ratio=pinching_ratio(forms),
        outradius=outradius(s) if outradius_value is None else outradius_value,
        inradius=inradius(s, forms) if with_inradius else None,
        area=surface_area,
        enclosed_volume=enclosed_volume(s),
        modified_volume=surface_area / s.n - _enclosed_integral(s, h),
        mean_curvature_min=float(np.min(forms.mean_curvature)),
        mean_curvature_max=float(np.max(forms.mean_curvature)),
        max_shape_norm=float(np.max(forms.shape_norm)),
        residual=float(np.max(np.abs(forms.mean_curvature - h_values))),
    )
