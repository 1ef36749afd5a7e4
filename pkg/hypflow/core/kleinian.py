"""
Closed-form geometry of the Kleinian (projective) model of hyperbolic space.

Points are Euclidean vectors of norm < 1. Geodesics are straight chords, the
metric is g = delta / (1 - r^2) + r^2 dr^2 / (1 - r^2)^2 and the hyperbolic
ball of radius R about the origin is the Euclidean ball of radius tanh R.
Everything here broadcasts over leading axes.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from hypflow.core.error_handling import DomainError

logger = logging.getLogger(__name__)

BOUNDARY_MARGIN = 1e-9
OPTIMAL_OUTRADIUS = float(np.arctanh(1.0 / np.sqrt(3.0)))


def _check_inside(x: np.ndarray, margin: float = BOUNDARY_MARGIN) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    norms = np.linalg.norm(x, axis=-1)
    if not np.all(np.isfinite(norms)) or np.any(norms > 1.0 - margin):
        raise DomainError(
            "Point outside the open Kleinian ball",
            details={"max_norm": float(np.max(norms)), "margin": margin},
        )
    return x


@dataclass(frozen=True)
class BallPoint:
    """Point of the Kleinian ball, validated on construction."""

    x: np.ndarray

    def __post_init__(self) -> None:
        x = np.array(self.x, dtype=float).reshape(-1)
        _check_inside(x)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @property
    def r(self) -> float:
        return float(np.linalg.norm(self.x))

    @property
    def dimension(self) -> int:
        """Ambient dimension n + 1."""
        return int(self.x.shape[0])

    @classmethod
    def origin(cls, dimension: int) -> "BallPoint":
        return cls(np.zeros(dimension))


@dataclass(frozen=True)
class MetricAtPoint:
    """The Kleinian metric tensor at one point."""

    g: np.ndarray
    point: BallPoint

    def __call__(self, X: np.ndarray, Y: np.ndarray) -> float:
        return float(np.asarray(X) @ self.g @ np.asarray(Y))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.g)


def metric_tensor(x: np.ndarray) -> np.ndarray:
    """Metric matrices at points of shape (..., d), returned as (..., d, d)."""
    x = np.asarray(x)
    d = x.shape[-1]
    s = 1.0 - np.sum(x * x, axis=-1)
    identity = np.eye(d)
    return identity / s[..., None, None] + x[..., :, None] * x[..., None, :] / (s**2)[..., None, None]


def inverse_metric_tensor(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    d = x.shape[-1]
    s = 1.0 - np.sum(x * x, axis=-1)
    return s[..., None, None] * (np.eye(d) - x[..., :, None] * x[..., None, :])


def metric_at(p: BallPoint) -> MetricAtPoint:
    return MetricAtPoint(g=metric_tensor(p.x), point=p)


def christoffel_correction(p: BallPoint, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Difference nabla_X Y - D_X Y of the Kleinian and Euclidean connections."""
    return christoffel_correction_array(p.x, np.asarray(X, dtype=float), np.asarray(Y, dtype=float))


def christoffel_correction_array(x: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    s = 1.0 - np.sum(x * x, axis=-1)
    xX = np.sum(x * X, axis=-1)
    xY = np.sum(x * Y, axis=-1)
    return (xX[..., None] * Y + xY[..., None] * X) / s[..., None]


def volume_density(x: np.ndarray) -> np.ndarray:
    """sqrt(det g) = (1 - r^2)^(-(d + 1) / 2) in ambient dimension d."""
    x = np.asarray(x)
    d = x.shape[-1]
    return (1.0 - np.sum(x * x, axis=-1)) ** (-0.5 * (d + 1))


def _hyperboloid_lift(x: np.ndarray) -> np.ndarray:
    scale = 1.0 / np.sqrt(1.0 - np.sum(x * x, axis=-1))
    return np.concatenate([x * scale[..., None], scale[..., None]], axis=-1)


def distance_array(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Hyperbolic distance between point arrays via the hyperboloid chord."""
    difference = _hyperboloid_lift(np.asarray(x, dtype=float)) - _hyperboloid_lift(np.asarray(y, dtype=float))
    spatial = np.sum(difference[..., :-1] ** 2, axis=-1)
    chord2 = np.maximum(spatial - difference[..., -1] ** 2, 0.0)
    return 2.0 * np.arcsinh(0.5 * np.sqrt(chord2))


def hyperbolic_distance(p: BallPoint, q: BallPoint) -> float:
    return float(distance_array(p.x, q.x))


def chord_length(p: BallPoint, q: BallPoint) -> float:
    """Hyperbolic length of the straight chord pq by quadrature of sqrt(g(v, v))."""
    velocity = q.x - p.x

    def speed(t: float) -> float:
        point = p.x + t * velocity
        return float(np.sqrt(velocity @ metric_tensor(point) @ velocity))

    value, _ = integrate.quad(speed, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=200)
    return float(value)


def geodesic_path(p: BallPoint, velocity: np.ndarray, t_end: float, steps: int = 200) -> np.ndarray:
    """Integrate the geodesic equation x'' = -Omega(x', x') with RK4; returns (steps + 1, d)."""

    def rhs(state: np.ndarray) -> np.ndarray:
        x, v = state[0], state[1]
        return np.stack([v, -christoffel_correction_array(x, v, v)])

    state = np.stack([p.x, np.asarray(velocity, dtype=float)])
    dt = t_end / steps
    path = [state[0].copy()]
    for _ in range(steps):
        k1 = rhs(state)
        k2 = rhs(state + 0.5 * dt * k1)
        k3 = rhs(state + 0.5 * dt * k2)
        k4 = rhs(state + dt * k3)
        state = state + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        _check_inside(state[0])
        path.append(state[0].copy())
    return np.array(path)


def radius_euclidean_to_hyperbolic(r: float) -> float:
    if r < 0.0 or r >= 1.0:
        raise DomainError("Euclidean radius must lie in [0, 1)", details={"r": r})
    return float(np.arctanh(r))


def radius_hyperbolic_to_euclidean(R: float) -> float:
    if R < 0.0:
        raise DomainError("Hyperbolic radius must be nonnegative", details={"R": R})
    return float(np.tanh(R))


def inradius_bound(R: float, n: int) -> float:
    """Radius of the geodesic ball inside any 1/2-pinched surface of outradius R."""
    if R < 0.0 or n < 1:
        raise DomainError("inradius_bound needs R >= 0 and n >= 1", details={"R": R, "n": n})
    return float(np.sqrt(2.0) / ((n + 1) * (n + 2)) * np.tanh(R) / np.cosh(R) ** 2)


def optimal_inradius(n: int) -> float:
    return float(np.sqrt(8.0 / 27.0) / ((n + 1) * (n + 2)))


def arccoth(value: float) -> float:
    if value <= 1.0:
        raise DomainError("Inverse hyperbolic cotangent needs an argument above 1", details={"value": value})
    return float(np.arctanh(1.0 / value))


def translate_to_origin(center: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Apply the hyperbolic translation along the line through ``center`` that sends it to 0."""
    c = np.asarray(center, dtype=float)
    x = np.asarray(points, dtype=float)
    c2 = float(c @ c)
    if c2 == 0.0:
        return x.copy()
    _check_inside(c)
    gamma = 1.0 / np.sqrt(1.0 - c2)
    cx = x @ c
    coefficient = (gamma - 1.0) * cx / c2 - gamma
    return (x + coefficient[..., None] * c) / (gamma * (1.0 - cx))[..., None]


def translate_from_origin(center: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Inverse of :func:`translate_to_origin`: sends 0 to ``center``."""
    return translate_to_origin(-np.asarray(center, dtype=float), points)


def plane_distance(center: np.ndarray, normals: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Hyperbolic distance from ``center`` to the planes {x : nu . x = b}."""
    c = np.asarray(center, dtype=float)
    gap = np.abs(normals @ c - offsets)
    scale = np.sqrt(1.0 - c @ c) * np.sqrt(np.sum(normals * normals, axis=-1) - offsets**2)
    return np.arcsinh(gap / scale)
