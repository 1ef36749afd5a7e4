import numpy as np
import pytest

from hypflow.core.error_handling import DomainError
from hypflow.core.kleinian import inradius_bound
from hypflow.core.sphere_grid import SphereGrid
from hypflow.models.models import Stencil
from hypflow.schemas.records import SurfaceSnapshot
from hypflow.services.audit import flipped_second_form_factor
from hypflow.services.hypersurface import (
    RadialGraph,
    area,
    codazzi_residual,
    diagnose,
    enclosed_volume,
    gauss_curvature_diagnostics,
    hyperbolic_forms,
    inradius,
    mean_curvature_field,
    modified_volume,
    outradius,
    pinching_ratio,
    pinching_transformation_check,
    recenter,
    surface_distance,
)


@pytest.mark.parametrize("a", [0.05, 0.2, 0.5])
def test_centered_circle_curvature(fine_circle_grid, a):
    forms = hyperbolic_forms(RadialGraph.sphere(fine_circle_grid, a))
    assert np.max(np.abs(forms.principal - 1.0 / a)) < 1e-6


@pytest.mark.parametrize("a", [0.05, 0.2, 0.5])
def test_centered_sphere_curvature(sphere_grid, a):
    forms = hyperbolic_forms(RadialGraph.sphere(sphere_grid, a))
    assert np.max(np.abs(forms.principal - 1.0 / a)) < 1e-3
    assert np.max(np.abs(forms.mean_curvature - 1.0 / a)) < 1e-3


def test_flipped_factor_reverses_curvature(sphere_grid):
    forms = hyperbolic_forms(RadialGraph.sphere(sphere_grid, 0.3), factor_fn=flipped_second_form_factor)
    assert np.all(forms.principal < 0.0)


def test_second_form_factor_where_the_normal_is_orthogonal_to_the_ray():
    # the tangent from the origin touches the circle at the node with angle 2 pi / 3
    grid = SphereGrid.build(1, 48, Stencil.SPECTRAL)
    forms = hyperbolic_forms(RadialGraph.sphere(grid, 0.2, center=[0.4, 0.0]))
    node = 16
    position = forms.position[node]
    assert float(np.dot(forms.euclidean.normal[node], position)) == pytest.approx(0.0, abs=1e-12)
    r2 = float(np.dot(position, position))
    assert r2 == pytest.approx(0.12, rel=1e-12)
    assert forms.factor[node] == pytest.approx(np.sqrt(1.0 - r2), rel=1e-12)
    assert abs(forms.factor[node] - 1.0) > 0.05
    assert np.allclose(forms.second_form[node], forms.euclidean.second_form[node] / np.sqrt(1.0 - r2))


def test_off_center_geodesic_sphere_has_constant_curvature(fine_circle_grid):
    radius = 0.4
    surface = RadialGraph.geodesic_sphere(fine_circle_grid, radius, center=[0.2, -0.1])
    mean, _ = mean_curvature_field(surface.grid, surface.rho, surface.center)
    assert np.max(np.abs(mean - 1.0 / np.tanh(radius))) < 1e-7


def test_mean_curvature_field_accepts_complex_radii(circle_grid):
    surface = RadialGraph.sphere(circle_grid, 0.3)
    mean, _ = mean_curvature_field(circle_grid, surface.rho.astype(complex), surface.center)
    assert np.iscomplexobj(mean)
    assert np.allclose(mean.real, 1.0 / 0.3)


def test_snapshot_round_trip_is_bit_exact(sphere_grid):
    surface = RadialGraph.perturbed_sphere(sphere_grid, 0.3, [(2, 0, 0.05), (3, 1, 0.02)], center=[0.01, 0.0, -0.02])
    text = surface.to_snapshot(time=0.125, step=3).model_dump_json()
    restored = RadialGraph.from_snapshot(SurfaceSnapshot.model_validate_json(text))
    assert np.array_equal(restored.rho, surface.rho)
    assert np.array_equal(restored.center, surface.center)
    assert restored.grid == surface.grid


def test_circle_measures(fine_circle_grid):
    radius = 0.3
    surface = RadialGraph.geodesic_sphere(fine_circle_grid, radius)
    assert area(surface) == pytest.approx(2.0 * np.pi * np.sinh(radius), rel=1e-10)
    assert enclosed_volume(surface) == pytest.approx(2.0 * np.pi * (np.cosh(radius) - 1.0), rel=1e-9)


def test_sphere_measures(sphere_grid):
    radius = 0.3
    surface = RadialGraph.geodesic_sphere(sphere_grid, radius)
    assert area(surface) == pytest.approx(4.0 * np.pi * np.sinh(radius) ** 2, rel=1e-10)
    assert enclosed_volume(surface) == pytest.approx(np.pi * (np.sinh(2.0 * radius) - 2.0 * radius), rel=1e-9)


def test_modified_volume_of_sphere(fine_circle_grid, h25):
    radius = 0.1
    surface = RadialGraph.geodesic_sphere(fine_circle_grid, radius)
    expected = 2.0 * np.pi * np.sinh(radius) - 25.0 * 2.0 * np.pi * (np.cosh(radius) - 1.0)
    assert modified_volume(surface, h25) == pytest.approx(expected, rel=1e-9)


def test_modified_volume_peaks_at_equilibrium(fine_circle_grid, h25, equilibrium_radius):
    volumes = [
        modified_volume(RadialGraph.geodesic_sphere(fine_circle_grid, equilibrium_radius + offset), h25)
        for offset in (-0.01, 0.0, 0.01)
    ]
    assert volumes[1] > volumes[0]
    assert volumes[1] > volumes[2]


def test_codazzi_residual_converges():
    residuals = []
    for resolution in (32, 64):
        grid = SphereGrid.build(2, resolution, Stencil.FD4)
        residuals.append(codazzi_residual(RadialGraph.perturbed_sphere(grid, 0.3, [(2, 0, 0.05), (3, 1, 0.02)])))
    assert residuals[0] < 1e-2
    assert residuals[1] < residuals[0] / 2.8


def test_codazzi_residual_vanishes_on_circles(circle_grid):
    assert codazzi_residual(RadialGraph.sphere(circle_grid, 0.3)) == 0.0


def test_outradius_of_geodesic_spheres(fine_circle_grid):
    assert outradius(RadialGraph.geodesic_sphere(fine_circle_grid, 0.3)) == pytest.approx(0.3, abs=1e-9)
    moved = RadialGraph.geodesic_sphere(fine_circle_grid, 0.3, center=[0.3, 0.1])
    assert outradius(moved) == pytest.approx(0.3, abs=1e-6)


def test_inradius_of_centered_sphere(sphere_grid):
    assert inradius(RadialGraph.geodesic_sphere(sphere_grid, 0.3)) == pytest.approx(0.3, abs=1e-8)


@pytest.mark.parametrize("radius", [0.1, 0.3, 0.5])
def test_inscribed_ball_bound_holds(sphere_grid, radius):
    surface = RadialGraph.perturbed_sphere(sphere_grid, radius, [(2, 0, 0.05), (3, 1, 0.02)])
    assert inradius(surface) > inradius_bound(outradius(surface), 2)


@pytest.mark.parametrize("radius", [0.1, 0.3, 0.5])
def test_pinching_improves_from_euclidean_to_hyperbolic(sphere_grid, radius):
    surface = RadialGraph.perturbed_sphere(sphere_grid, radius, [(2, 0, 0.05), (3, 1, 0.02)])
    assert pinching_transformation_check(surface).all_hold


def test_sectional_curvatures_of_sphere(sphere_grid):
    radius = 0.4
    surface = RadialGraph.geodesic_sphere(sphere_grid, radius)
    sectional = gauss_curvature_diagnostics(surface)
    assert sectional.shape == (16, 32, 1)
    assert np.allclose(sectional, 1.0 / np.sinh(radius) ** 2, rtol=1e-2)


def test_surface_distance_ignores_isometries(fine_circle_grid):
    centered = RadialGraph.geodesic_sphere(fine_circle_grid, 0.3)
    moved = RadialGraph.geodesic_sphere(fine_circle_grid, 0.3, center=[0.2, 0.1])
    larger = RadialGraph.geodesic_sphere(fine_circle_grid, 0.32)
    assert surface_distance(centered, moved) < 1e-6
    assert surface_distance(centered, larger) == pytest.approx(0.02, abs=1e-6)


def test_recenter_keeps_the_surface(fine_circle_grid):
    surface = RadialGraph.geodesic_sphere(fine_circle_grid, 0.3)
    shifted = recenter(surface, [0.05, -0.02])
    back = recenter(shifted, [0.0, 0.0])
    assert np.allclose(back.rho, surface.rho, atol=1e-9)


def test_radial_graph_validation(circle_grid):
    with pytest.raises(DomainError):
        RadialGraph.sphere(circle_grid, 1.2)
    with pytest.raises(DomainError):
        RadialGraph.sphere(circle_grid, 0.5, center=[0.6, 0.0])
    with pytest.raises(DomainError):
        RadialGraph(circle_grid, np.full(16, 0.3), np.zeros(2))


def test_diagnostics_of_equilibrium(fine_circle_grid, h25, equilibrium_radius):
    surface = RadialGraph.geodesic_sphere(fine_circle_grid, equilibrium_radius)
    diagnostics = diagnose(surface, h25)
    assert diagnostics.residual < 1e-8
    assert diagnostics.outradius == pytest.approx(equilibrium_radius, abs=1e-9)
    assert diagnostics.inradius == pytest.approx(equilibrium_radius, abs=1e-8)
    assert pinching_ratio(hyperbolic_forms(surface)) == pytest.approx(1.0)
