import pytest

from hypflow.core.error_handling import ConfigurationError
from hypflow.services.audit import AuditSuite

QUICK_CHECKS = [
    "metric_identities",
    "metric_compatibility",
    "geodesics_are_chords",
    "distance_matches_chord_integral",
    "optimal_confinement_radius",
    "sphere_curvature",
    "pinching_transformation",
    "inscribed_ball_bound",
    "point_selection",
    "forcing_admissibility",
]


@pytest.mark.parametrize("name", QUICK_CHECKS)
def test_quick_check_passes(name):
    report = AuditSuite().run([name])
    assert [check.name for check in report.checks] == [name]
    assert report.passed, report.checks[0].message


def test_flipped_second_form_is_caught():
    report = AuditSuite(mutation="flip-second-form").run(["sphere_curvature", "metric_identities"])
    by_name = {check.name: check for check in report.checks}
    assert not by_name["sphere_curvature"].passed
    assert by_name["metric_identities"].passed
    assert not report.passed
    assert report.mutation == "flip-second-form"


def test_unknown_mutation_is_rejected():
    with pytest.raises(ConfigurationError):
        AuditSuite(mutation="drop-christoffel")


def test_resolution_scale_has_a_floor():
    suite = AuditSuite(resolution_scale=0.1)
    assert suite.resolution(32) == 16
    assert suite.widened(1e-2, 4) > 1e-2


@pytest.mark.slow
def test_full_suite_passes():
    report = AuditSuite().run()
    failed = [check.name for check in report.checks if not check.passed]
    assert failed == []
    assert len(report.checks) == 15
