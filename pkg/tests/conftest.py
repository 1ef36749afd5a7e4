import numpy as np
import pytest

from hypflow.core.sphere_grid import SphereGrid
from hypflow.models.models import Stencil
from hypflow.services.forcing import ForcingField

H_REFERENCE = 25.0


@pytest.fixture
def circle_grid() -> SphereGrid:
    return SphereGrid.build(1, 32, Stencil.SPECTRAL)


@pytest.fixture
def fine_circle_grid() -> SphereGrid:
    return SphereGrid.build(1, 64, Stencil.SPECTRAL)


@pytest.fixture
def sphere_grid() -> SphereGrid:
    return SphereGrid.build(2, 16, Stencil.FD4)


@pytest.fixture
def spectral_sphere_grid() -> SphereGrid:
    return SphereGrid.build(2, 16, Stencil.SPECTRAL)


@pytest.fixture
def h25() -> ForcingField:
    return ForcingField.constant(H_REFERENCE)


@pytest.fixture
def equilibrium_radius() -> float:
    """Hyperbolic radius of the stationary sphere under h = 25."""
    return float(np.arctanh(1.0 / H_REFERENCE))
