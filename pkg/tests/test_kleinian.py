import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypflow.core.error_handling import DomainError
from hypflow.core.kleinian import (
    OPTIMAL_OUTRADIUS,
    BallPoint,
    arccoth,
    chord_length,
    distance_array,
    geodesic_path,
    hyperbolic_distance,
    inradius_bound,
    inverse_metric_tensor,
    metric_tensor,
    optimal_inradius,
    plane_distance,
    translate_from_origin,
    translate_to_origin,
)

coordinate = st.floats(min_value=-0.55, max_value=0.55, allow_nan=False)
ball_point = st.tuples(coordinate, coordinate, coordinate).map(np.array)


def test_metric_on_radial_and_tangent_vectors():
    x = np.array([0.3, -0.2, 0.4])
    r2 = x @ x
    g = metric_tensor(x)
    radial = x / np.sqrt(r2)
    tangent = np.array([0.2, 0.3, 0.0])
    tangent /= np.linalg.norm(tangent)
    assert radial @ g @ radial == pytest.approx(1.0 / (1.0 - r2) ** 2, rel=1e-12)
    assert tangent @ g @ tangent == pytest.approx(1.0 / (1.0 - r2), rel=1e-12)
    assert abs(radial @ g @ tangent) < 1e-12


def test_inverse_metric():
    x = np.array([0.1, 0.5, -0.3])
    assert np.allclose(metric_tensor(x) @ inverse_metric_tensor(x), np.eye(3), atol=1e-12)


def test_points_outside_the_ball_are_rejected():
    with pytest.raises(DomainError):
        BallPoint(np.array([0.8, 0.8, 0.0]))


@given(ball_point, ball_point)
@settings(max_examples=200, deadline=None)
def test_distance_is_symmetric_and_positive(x, y):
    d_xy = float(distance_array(x, y))
    d_yx = float(distance_array(y, x))
    assert d_xy == pytest.approx(d_yx, abs=1e-12)
    assert d_xy >= 0.0
    assert float(distance_array(x, x)) == pytest.approx(0.0, abs=1e-7)


@given(ball_point, ball_point, ball_point)
@settings(max_examples=200, deadline=None)
def test_triangle_inequality(x, y, z):
    assert float(distance_array(x, z)) <= float(distance_array(x, y) + distance_array(y, z)) + 1e-9


def test_distance_from_origin_is_arctanh():
    point = np.array([0.0, 0.6, 0.0])
    assert hyperbolic_distance(BallPoint.origin(3), BallPoint(point)) == pytest.approx(np.arctanh(0.6), rel=1e-12)


def test_chord_integral_matches_closed_form():
    p = BallPoint(np.array([0.2, -0.4, 0.1]))
    q = BallPoint(np.array([-0.5, 0.3, 0.2]))
    assert chord_length(p, q) == pytest.approx(hyperbolic_distance(p, q), abs=1e-10)


def test_geodesics_are_straight_chords():
    start = np.array([0.1, -0.2, 0.05])
    velocity = np.array([0.3, 0.2, -0.1])
    path = geodesic_path(BallPoint(start), velocity, 1.0)
    direction = velocity / np.linalg.norm(velocity)
    offsets = path - start
    transverse = offsets - np.outer(offsets @ direction, direction)
    assert np.max(np.linalg.norm(transverse, axis=1)) < 1e-8


@given(ball_point, ball_point, ball_point)
@settings(max_examples=100, deadline=None)
def test_translations_preserve_distance(center, x, y):
    moved = translate_to_origin(center, np.stack([x, y]))
    expected = float(distance_array(x, y))
    assert float(distance_array(moved[0], moved[1])) == pytest.approx(expected, rel=1e-7, abs=1e-8)


def test_translation_sends_center_to_origin_and_back():
    center = np.array([0.3, 0.1, -0.4])
    assert np.allclose(translate_to_origin(center, center[None]), 0.0, atol=1e-14)
    points = np.array([[0.1, 0.2, 0.3], [-0.5, 0.0, 0.2]])
    assert np.allclose(translate_from_origin(center, translate_to_origin(center, points)), points, atol=1e-13)


def test_plane_distance_from_origin():
    # plane x_3 = 0.5 is at distance arctanh(0.5) from the origin
    distance = plane_distance(np.zeros(3), np.array([[0.0, 0.0, 1.0]]), np.array([0.5]))
    assert distance[0] == pytest.approx(np.arctanh(0.5), rel=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_inradius_bound_peaks_at_optimal_radius(n):
    radii = np.linspace(0.05, 2.0, 4001)
    values = np.array([inradius_bound(R, n) for R in radii])
    assert radii[np.argmax(values)] == pytest.approx(OPTIMAL_OUTRADIUS, abs=1e-3)
    assert inradius_bound(OPTIMAL_OUTRADIUS, n) == pytest.approx(optimal_inradius(n), rel=1e-12)


def test_optimal_outradius_value():
    assert np.tanh(OPTIMAL_OUTRADIUS) == pytest.approx(1.0 / np.sqrt(3.0), rel=1e-14)


def test_arccoth_domain():
    assert arccoth(25.0) == pytest.approx(np.arctanh(0.04), rel=1e-14)
    with pytest.raises(DomainError):
        arccoth(1.0)
