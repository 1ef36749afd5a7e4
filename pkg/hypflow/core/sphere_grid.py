"""
Structured samples of the unit sphere S^n (n = 1 or 2) with differentiation,
quadrature and interpolation.

Fields live on the grid with the grid axes first: shape ``(N,)`` for n = 1
(uniform angles) and ``(N_theta, N_phi)`` for n = 2 (midpoint colatitudes,
uniform longitudes, ``N_phi = 2 N_theta``). Colatitude derivatives use the
pole-crossing extension ``f(-theta, phi) = parity * f(theta, phi + pi)``,
which doubles the colatitude axis into a periodic one. ``parity`` is -1 for
tensor components carrying an odd number of colatitude indices.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Tuple

import numpy as np

from hypflow.core.error_handling import ConfigurationError
from hypflow.models.models import Stencil

MIN_RESOLUTION = 16
MAX_RESOLUTION = 256


def _periodic_derivative(f: np.ndarray, spacing: float, order: int, stencil: Stencil) -> np.ndarray:
    """Derivative of a field periodic along axis 0."""
    if np.iscomplexobj(f):
        return _periodic_derivative(f.real, spacing, order, stencil) + 1j * _periodic_derivative(
            f.imag, spacing, order, stencil
        )

    if stencil is Stencil.SPECTRAL:
        size = f.shape[0]
        wavenumbers = np.fft.fftfreq(size, d=spacing / (2.0 * np.pi))
        symbol = (1j * wavenumbers) ** order
        if order % 2 == 1 and size % 2 == 0:
            symbol[size // 2] = 0.0
        symbol = symbol.reshape((size,) + (1,) * (f.ndim - 1))
        return np.fft.ifft(symbol * np.fft.fft(f, axis=0), axis=0).real

    plus1, minus1 = np.roll(f, -1, axis=0), np.roll(f, 1, axis=0)
    plus2, minus2 = np.roll(f, -2, axis=0), np.roll(f, 2, axis=0)
    if order == 1:
        return (-plus2 + 8.0 * plus1 - 8.0 * minus1 + minus2) / (12.0 * spacing)
    if order == 2:
        return (-plus2 + 16.0 * plus1 - 30.0 * f + 16.0 * minus1 - minus2) / (12.0 * spacing**2)
    raise ValueError(f"Unsupported derivative order {order}")


def fejer_weights(count: int) -> np.ndarray:
    """Fejér's first rule on x_j = cos((j + 1/2) pi / count), integrating over [-1, 1]."""
    theta = (np.arange(count) + 0.5) * np.pi / count
    k = np.arange(1, count // 2 + 1)
    series = np.cos(2.0 * np.outer(theta, k)) / (4.0 * k**2 - 1.0)
    return (2.0 / count) * (1.0 - 2.0 * series.sum(axis=1))


@dataclass(frozen=True)
class SphereGrid:
    """Latitude-longitude (n = 2) or uniform-angle (n = 1) sample of S^n."""

    n: int
    shape: Tuple[int, ...]
    stencil: Stencil

    def __post_init__(self) -> None:
        if self.n not in (1, 2):
            raise ConfigurationError(f"Unsupported surface dimension n={self.n}", details={"n": self.n})
        if len(self.shape) != self.n:
            raise ConfigurationError("Grid shape does not match dimension", details={"shape": list(self.shape)})
        if min(self.shape) < MIN_RESOLUTION or max(self.shape) > 2 * MAX_RESOLUTION:
            raise ConfigurationError(
                "Grid resolution outside the supported range",
                details={"shape": list(self.shape), "min": MIN_RESOLUTION},
            )
        if self.n == 2 and self.shape[1] % 2:
            raise ConfigurationError("Longitude count must be even", details={"shape": list(self.shape)})

    @classmethod
    def build(cls, n: int, resolution: int, stencil: Stencil | None = None) -> "SphereGrid":
        if stencil is None:
            stencil = Stencil.SPECTRAL if n == 1 else Stencil.FD4
        shape = (resolution,) if n == 1 else (resolution, 2 * resolution)
        return cls(n=n, shape=tuple(shape), stencil=stencil)

    def refined(self, factor: int = 2) -> "SphereGrid":
        return SphereGrid(self.n, tuple(size * factor for size in self.shape), self.stencil)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def spacing(self) -> Tuple[float, ...]:
        if self.n == 1:
            return (2.0 * np.pi / self.shape[0],)
        return (np.pi / self.shape[0], 2.0 * np.pi / self.shape[1])

    @cached_property
    def angles(self) -> Tuple[np.ndarray, ...]:
        if self.n == 1:
            return (np.arange(self.shape[0]) * self.spacing[0],)
        theta = (np.arange(self.shape[0]) + 0.5) * self.spacing[0]
        phi = np.arange(self.shape[1]) * self.spacing[1]
        return tuple(np.meshgrid(theta, phi, indexing="ij"))

    @cached_property
    def directions(self) -> np.ndarray:
        """Unit vectors omega at every node, shape (*shape, n + 1)."""
        if self.n == 1:
            (theta,) = self.angles
            return np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        theta, phi = self.angles
        return np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1)

    @cached_property
    def direction_derivatives(self) -> np.ndarray:
        """First derivatives d_i omega, shape (n, *shape, n + 1)."""
        if self.n == 1:
            (theta,) = self.angles
            return np.stack([np.stack([-np.sin(theta), np.cos(theta)], axis=-1)])
        theta, phi = self.angles
        d_theta = np.stack([np.cos(theta) * np.cos(phi), np.cos(theta) * np.sin(phi), -np.sin(theta)], axis=-1)
        d_phi = np.stack([-np.sin(theta) * np.sin(phi), np.sin(theta) * np.cos(phi), np.zeros_like(theta)], axis=-1)
        return np.stack([d_theta, d_phi])

    @cached_property
    def direction_second_derivatives(self) -> np.ndarray:
        """Second derivatives d_i d_j omega, shape (n, n, *shape, n + 1)."""
        omega = self.directions
        if self.n == 1:
            return (-omega)[None, None]
        theta, phi = self.angles
        d_tp = np.stack([-np.cos(theta) * np.sin(phi), np.cos(theta) * np.cos(phi), np.zeros_like(theta)], axis=-1)
        d_pp = np.stack([-np.sin(theta) * np.cos(phi), -np.sin(theta) * np.sin(phi), np.zeros_like(theta)], axis=-1)
        return np.stack([np.stack([-omega, d_tp]), np.stack([d_tp, d_pp])])

    @cached_property
    def sin_theta(self) -> np.ndarray:
        if self.n == 1:
            return np.ones(self.shape)
        return np.sin(self.angles[0])

    @cached_property
    def solid_weights(self) -> np.ndarray:
        """Weights w with sum(w * f) ~ integral of f over S^n against the round measure."""
        if self.n == 1:
            return np.full(self.shape, self.spacing[0])
        fejer = fejer_weights(self.shape[0])
        return np.repeat(fejer[:, None], self.shape[1], axis=1) * self.spacing[1]

    @cached_property
    def parameter_weights(self) -> np.ndarray:
        """Weights for integrals of densities written in the angular parameters."""
        return self.solid_weights / self.sin_theta

    def integrate(self, density: np.ndarray) -> float:
        """Integral of a parameter-space density (e.g. sqrt det g in theta/phi)."""
        axes = tuple(range(self.n))
        return float(np.sum(self.parameter_weights * density, axis=axes))

    # -- differentiation -------------------------------------------------

    def _double_colatitude(self, f: np.ndarray, parity: int) -> np.ndarray:
        reflected = parity * np.roll(f[::-1], self.shape[1] // 2, axis=1)
        return np.concatenate([f, reflected], axis=0)

    def derivative(self, f: np.ndarray, axis: int, order: int = 1, parity: int = 1) -> np.ndarray:
        """d^order f / d(angle_axis)^order for a field with grid axes first."""
        if self.n == 1 or axis == 1:
            moved = np.moveaxis(f, axis, 0)
            result = _periodic_derivative(moved, self.spacing[axis], order, self.stencil)
            return np.moveaxis(result, 0, axis)
        doubled = self._double_colatitude(f, parity)
        return _periodic_derivative(doubled, self.spacing[0], order, self.stencil)[: self.shape[0]]

    def second_derivative(self, f: np.ndarray, i: int, j: int, parity: int = 1) -> np.ndarray:
        if i == j:
            return self.derivative(f, i, order=2, parity=parity)
        # d_theta d_phi: the phi derivative keeps the parity of f
        return self.derivative(self.derivative(f, 1, parity=parity), 0, parity=parity)

    def component_parity(self, *indices: int) -> int:
        """Pole-crossing parity of a tensor component with the given coordinate indices."""
        if self.n == 1:
            return 1
        return -1 if sum(1 for index in indices if index == 0) % 2 else 1

    def gradient(self, f: np.ndarray, parity: int = 1) -> np.ndarray:
        """Stack of partial derivatives along a new last axis."""
        return np.stack([self.derivative(f, axis, parity=parity) for axis in range(self.n)], axis=-1)

    # -- interpolation ---------------------------------------------------

    def angles_of(self, vectors: np.ndarray) -> Tuple[np.ndarray, ...]:
        """Angular coordinates of (not necessarily unit) vectors, shape (..., n + 1)."""
        if self.n == 1:
            return (np.mod(np.arctan2(vectors[..., 1], vectors[..., 0]), 2.0 * np.pi),)
        norm = np.linalg.norm(vectors, axis=-1)
        theta = np.arccos(np.clip(vectors[..., 2] / norm, -1.0, 1.0))
        phi = np.mod(np.arctan2(vectors[..., 1], vectors[..., 0]), 2.0 * np.pi)
        return theta, phi

    def interpolate(self, values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
        """Trigonometric interpolation of a scalar grid field at the directions of ``vectors``."""
        if self.n == 1:
            (theta,) = self.angles_of(vectors)
            size = self.shape[0]
            coefficients = np.fft.fft(values) / size
            modes = np.fft.fftfreq(size, d=1.0 / size)
            if size % 2 == 0:
                coefficients[size // 2] *= 0.5
                coefficients = np.append(coefficients, coefficients[size // 2])
                modes = np.append(modes, size // 2)
            phase = np.exp(1j * np.multiply.outer(theta, modes))
            return (phase @ coefficients).real

        theta, phi = self.angles_of(vectors)
        doubled = self._double_colatitude(values, 1)
        rows, cols = doubled.shape
        coefficients = np.fft.fft2(doubled) / (rows * cols)
        row_modes = np.fft.fftfreq(rows, d=1.0 / rows)
        col_modes = np.fft.fftfreq(cols, d=1.0 / cols)
        theta_phase = np.exp(1j * np.multiply.outer(theta - 0.5 * self.spacing[0], row_modes))
        phi_phase = np.exp(1j * np.multiply.outer(phi, col_modes))
        return np.einsum("...p,pq,...q->...", theta_phase, coefficients, phi_phase).real
