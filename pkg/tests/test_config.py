from pathlib import Path

import pytest

from hypflow.core.config import Settings
from hypflow.core.error_handling import EXIT_CONFIG, ConfigurationError
from hypflow.models.models import ForcingKind
from hypflow.schemas.experiment import config_from_yaml, config_to_yaml, load_config, load_catalog_spec

BUMP_CONFIG = """
n: 1
resolution: 32
seed: 7
surface:
  radius_offset: 0.01
  harmonics:
    - degree: 2
      order: 0
      amplitude: 0.02
forcing:
  type: radial-bump
  base: 25.0
  amplitude: 1.0
  width: 0.1
  center: [0.02, 0.0]
integrator:
  max_steps: 10
"""


def test_yaml_document_is_validated():
    config = config_from_yaml(BUMP_CONFIG)
    assert config.n == 1
    assert config.forcing.type is ForcingKind.RADIAL_BUMP
    assert config.surface.harmonics[0].amplitude == 0.02
    assert config.integrator.max_steps == 10
    assert config.integrator.dt_max == 1e-3


def test_yaml_round_trip_preserves_config():
    config = config_from_yaml(BUMP_CONFIG)
    assert config_from_yaml(config_to_yaml(config)) == config


def test_empty_document_gives_defaults():
    config = config_from_yaml("")
    assert config.n == 2
    assert config.forcing.base == 25.0


def test_validation_error_carries_line_number():
    text = "n: 1\nresolution: 8\n"
    with pytest.raises(ConfigurationError) as info:
        config_from_yaml(text)
    error = info.value
    assert error.exit_code == EXIT_CONFIG
    assert error.error_code == "VALIDATION_ERROR"
    assert error.details["resolution"]["line"] == 2


def test_unknown_key_is_rejected():
    with pytest.raises(ConfigurationError) as info:
        config_from_yaml("n: 1\nintegrator:\n  dt_maximum: 0.1\n")
    assert info.value.details["integrator.dt_maximum"]["line"] == 3


def test_vector_dimensions_must_match_n():
    with pytest.raises(ConfigurationError):
        config_from_yaml("n: 2\nforcing:\n  center: [0.0, 0.0]\n")


def test_malformed_yaml_reports_line():
    with pytest.raises(ConfigurationError) as info:
        config_from_yaml("n: 1\nforcing: [1, 2\n")
    assert info.value.details["line"] is not None


def test_non_mapping_document_is_rejected():
    with pytest.raises(ConfigurationError):
        config_from_yaml("- 1\n- 2\n")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "absent.yaml")


def test_catalog_spec(tmp_path):
    path = tmp_path / "catalog.yaml"
    path.write_text("entries:\n  - label: sphere\n    path: sphere.json\n", encoding="utf-8")
    spec = load_catalog_spec(path)
    assert [entry.label for entry in spec.entries] == ["sphere"]


def test_settings_read_environment(monkeypatch):
    monkeypatch.setenv("HYPFLOW_THREADS", "3")
    monkeypatch.setenv("HYPFLOW_LOG_LEVEL", "DEBUG")
    settings = Settings()
    assert settings.max_workers == 3
    assert settings.LOG_LEVEL == "DEBUG"


def test_worker_cap_is_at_least_one(monkeypatch):
    monkeypatch.setenv("HYPFLOW_THREADS", "0")
    assert Settings().max_workers == 1


CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.mark.parametrize("name", ["sphere.yaml", "equilibrium.yaml", "bump.yaml"])
def test_shipped_configs_validate(name):
    config = load_config(CONFIGS / name)
    assert config.forcing.base == 25.0


def test_shipped_catalog_validates():
    assert [entry.label for entry in load_catalog_spec(CONFIGS / "catalog.yaml").entries] == ["equilibrium"]
