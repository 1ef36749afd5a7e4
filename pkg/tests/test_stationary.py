import numpy as np
import pytest

from hypflow.core.error_handling import ConvergenceError
from hypflow.core.sphere_grid import SphereGrid
from hypflow.models.models import Stencil
from hypflow.schemas.experiment import ForcingSpec, StationaryControls
from hypflow.services import stationary
from hypflow.services.forcing import ForcingField
from hypflow.services.hypersurface import RadialGraph, hyperbolic_forms


def _sphere_error(surface: RadialGraph, radius: float) -> float:
    return float(np.max(np.abs(surface.rho - np.tanh(radius))))


@pytest.mark.parametrize("offset", [-0.01, 0.01, 0.03])
def test_newton_finds_the_stationary_sphere(circle_grid, h25, equilibrium_radius, offset):
    initial = RadialGraph.geodesic_sphere(circle_grid, equilibrium_radius + offset)
    result = stationary.newton_solve(initial, h25)
    assert result.iterations <= 5
    assert result.residual < 1e-10
    assert _sphere_error(result.surface, equilibrium_radius) < 1e-9


def test_newton_on_sphere_grid(spectral_sphere_grid, h25, equilibrium_radius):
    initial = RadialGraph.geodesic_sphere(spectral_sphere_grid, equilibrium_radius + 0.01)
    result = stationary.newton_solve(initial, h25, StationaryControls(tol=1e-9))
    assert result.iterations <= 5
    assert _sphere_error(result.surface, equilibrium_radius) < 1e-9


def test_exact_input_takes_no_steps(circle_grid, h25, equilibrium_radius):
    initial = RadialGraph.geodesic_sphere(circle_grid, equilibrium_radius)
    result = stationary.newton_solve(initial, h25)
    assert result.iterations == 0
    assert result.surface is initial


def test_newton_converges_quadratically_from_a_perturbation(circle_grid, h25, equilibrium_radius):
    initial = RadialGraph.perturbed_sphere(circle_grid, np.tanh(equilibrium_radius + 0.005), [(2, 0, 0.02)])
    result = stationary.newton_solve(initial, h25, StationaryControls(tol=1e-10))
    history = result.history
    assert history[-1] < 1e-10
    assert result.iterations <= 8
    # superlinear once close
    for previous, current in zip(history, history[1:]):
        if previous < 1e-3:
            assert current < previous**1.5 + 1e-12
    assert _sphere_error(result.surface, equilibrium_radius) < 1e-3


def test_newton_gives_up_after_max_iterations(circle_grid, h25, equilibrium_radius):
    initial = RadialGraph.perturbed_sphere(circle_grid, np.tanh(equilibrium_radius + 0.005), [(2, 0, 0.02)])
    with pytest.raises(ConvergenceError):
        stationary.newton_solve(initial, h25, StationaryControls(tol=1e-30, max_iterations=1))


def test_solve_stationary_admits_result(circle_grid, h25, equilibrium_radius):
    initial = RadialGraph.geodesic_sphere(circle_grid, equilibrium_radius + 0.01)
    surface = stationary.solve_stationary(initial, h25, tol=1e-10)
    assert np.max(np.abs(stationary.residual(surface, h25))) < 1e-10


def test_complex_step_jacobian_matches_difference_quotients(circle_grid, h25, equilibrium_radius):
    surface = RadialGraph.perturbed_sphere(circle_grid, np.tanh(equilibrium_radius + 0.01), [(3, 0, 0.03)])
    _, jacobian = stationary.residual_jacobian(surface, h25)
    direction = np.cos(2.0 * circle_grid.angles[0]) * 1e-3
    step = 1e-6
    plus = stationary.residual(surface.with_rho(surface.rho + step * direction), h25)
    minus = stationary.residual(surface.with_rho(surface.rho - step * direction), h25)
    numeric = (plus - minus) / (2.0 * step)
    assert np.allclose(jacobian @ direction.ravel(), numeric, rtol=1e-5, atol=1e-5 * np.max(np.abs(numeric)))


@pytest.mark.parametrize("n, resolution", [(1, 32), (2, 16)])
def test_jacobi_spectrum_of_the_sphere(n, resolution, h25, equilibrium_radius):
    grid = SphereGrid.build(n, resolution, Stencil.SPECTRAL)
    system = stationary.jacobi_assemble(RadialGraph.geodesic_sphere(grid, equilibrium_radius), h25)
    for degree in range(5):
        expected = stationary.sphere_jacobi_eigenvalue(degree, n, equilibrium_radius)
        nearest = float(np.min(np.abs(system.spectrum - expected)))
        assert nearest < 1e-3 * max(1.0, abs(expected))
    assert stationary.nondegeneracy_probe(system).kernel_count == n + 1


def test_sphere_eigenvalues():
    radius = 0.3
    # constant mode: only the csch^2 term
    assert stationary.sphere_jacobi_eigenvalue(0, 2, radius) == pytest.approx(1.0 / np.sinh(radius) ** 2)
    # degree one modes are translations
    assert stationary.sphere_jacobi_eigenvalue(1, 1, radius) == pytest.approx(0.0, abs=1e-12)
    assert stationary.sphere_jacobi_eigenvalue(1, 2, radius) == pytest.approx(0.0, abs=1e-12)


def test_jacobi_operator_is_residual_rate_along_the_normal(circle_grid, h25, equilibrium_radius):
    surface = RadialGraph.perturbed_sphere(circle_grid, np.tanh(equilibrium_radius + 0.01), [(2, 0, 0.02)])
    system = stationary.jacobi_assemble(surface, h25, with_spectrum=False)
    assert system.spectrum is None
    phi = np.cos(3.0 * circle_grid.angles[0])
    rates = hyperbolic_forms(surface).radial_rate_factor
    step = 1e-7
    plus = stationary.residual(surface.with_rho(surface.rho + step * rates * phi), h25)
    minus = stationary.residual(surface.with_rho(surface.rho - step * rates * phi), h25)
    numeric = -(plus - minus) / (2.0 * step)
    assert np.allclose(system.operator @ phi.ravel(), numeric, rtol=1e-4, atol=1e-4 * np.max(np.abs(numeric)))


def test_bump_forcing_has_a_nondegenerate_stationary_surface(circle_grid):
    h = ForcingField.radial_bump(25.0, 1.0, 0.1, np.array([0.02, 0.0]))
    # h is close to 25.93 on the circle about the bump center
    initial = RadialGraph.geodesic_sphere(circle_grid, float(np.arctanh(1.0 / 25.95)), center=[0.02, 0.0])
    result = stationary.newton_solve(initial, h, StationaryControls(tol=1e-10))
    system = stationary.jacobi_assemble(result.surface, h)
    kernel = stationary.nondegeneracy_probe(system)
    assert kernel.kernel_count == 0
    assert len(kernel.lowest_eigenvalues) == stationary.REPORTED_EIGENVALUES


def test_stationary_report(circle_grid, h25, equilibrium_radius):
    result = stationary.newton_solve(RadialGraph.geodesic_sphere(circle_grid, equilibrium_radius + 0.01), h25)
    report = stationary.stationary_report(result, h25, ForcingSpec(base=25.0), label="sphere")
    assert report.label == "sphere"
    assert report.kernel_count == 2
    assert report.mean_radius == pytest.approx(equilibrium_radius, abs=1e-9)
    expected_volume = 2.0 * np.pi * np.sinh(equilibrium_radius) - 25.0 * 2.0 * np.pi * (
        np.cosh(equilibrium_radius) - 1.0
    )
    assert report.modified_volume == pytest.approx(expected_volume, rel=1e-9)
    assert RadialGraph.from_snapshot(report.surface).rho.shape == (32,)


def test_centered_bump_spectrum_is_the_sphere_spectrum_shifted(spectral_sphere_grid):
    amplitude, width = 1.0, 0.1
    h = ForcingField.radial_bump(25.0, amplitude, width, np.zeros(3))
    initial = RadialGraph.geodesic_sphere(spectral_sphere_grid, float(np.arctanh(1.0 / 25.9)))
    result = stationary.newton_solve(initial, h, StationaryControls(tol=1e-10))
    rho = result.surface.rho
    assert np.ptp(rho) < 1e-10
    radius = float(np.arctanh(np.mean(rho)))
    u = np.tanh(radius)
    # on a centered sphere dh/ds is the radial derivative of h
    shift = -amplitude * u / width**2 * np.exp(-(u**2) / (2.0 * width**2)) * (1.0 - u**2)
    system = stationary.jacobi_assemble(result.surface, h)
    for degree in range(5):
        expected = stationary.sphere_jacobi_eigenvalue(degree, 2, radius) + shift
        nearest = float(np.min(np.abs(system.spectrum - expected)))
        assert nearest < 1e-3 * max(1.0, abs(expected))
    kernel = stationary.nondegeneracy_probe(system)
    assert kernel.kernel_count == 0
