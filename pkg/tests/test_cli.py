import json
from pathlib import Path

import numpy as np
import pytest

from hypflow.api.sweep import sweep_configs
from hypflow.core.config import settings
from hypflow.core.error_handling import EXIT_CONFIG, EXIT_OK, EXIT_VIOLATION, ConfigurationError
from hypflow.main import create_parser, main
from hypflow.schemas.experiment import OutputSpec, load_config
from hypflow.schemas.reports import StationaryReport
from hypflow.services.experiment import build_initial_surface, output_directory

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

EQUILIBRIUM_CONFIG = """\
n: 1
resolution: 32
stencil: spectral
forcing:
  type: constant
  base: 25.0
integrator:
  stationary_window: 5
  max_steps: 50
"""


def _write_config(tmp_path: Path, text: str = EQUILIBRIUM_CONFIG) -> Path:
    path = tmp_path / "experiment.yaml"
    path.write_text(text + f"output:\n  directory: {tmp_path / 'runs'}\n", encoding="utf-8")
    return path


def test_parser_lists_subcommands():
    parser = create_parser()
    for command in ("flow", "stationary", "check", "sweep", "decompose"):
        args = parser.parse_args([command, "experiment.yaml"] if command != "check" else [command])
        assert args.command == command


def test_flow_on_equilibrium(tmp_path):
    config = _write_config(tmp_path)
    assert main(["flow", str(config), "--output", str(tmp_path / "run")]) == EXIT_OK
    summary = json.loads((tmp_path / "run" / "summary.json").read_text())
    assert summary["reason"] == "converged"
    assert (tmp_path / "run" / "log.jsonl").exists()
    assert (tmp_path / "run" / "diagnostics.csv").exists()


def test_flow_rejects_large_surface(tmp_path, capsys):
    config = _write_config(tmp_path, EQUILIBRIUM_CONFIG + "surface:\n  radius: 0.8\n")
    assert main(["flow", str(config)]) == EXIT_CONFIG
    detail = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert "outradius" in detail["details"]


def test_invalid_config_exits_with_config_code(tmp_path, capsys):
    config = _write_config(tmp_path, EQUILIBRIUM_CONFIG + "resolution_scale: 2\n")
    assert main(["flow", str(config)]) == EXIT_CONFIG
    assert "VALIDATION_ERROR" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["flow", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG


def test_stationary_writes_labelled_report(tmp_path):
    config = _write_config(tmp_path)
    assert main(["stationary", str(config), "--label", "sphere", "--output", str(tmp_path)]) == EXIT_OK
    report = StationaryReport.model_validate_json((tmp_path / "sphere.json").read_text())
    assert report.label == "sphere"
    assert report.kernel_count == 2


@pytest.mark.slow
def test_decompose_fixture(tmp_path):
    output = tmp_path / "decomposition.json"
    assert main(["decompose", "--fixture", "--output", str(output)]) == EXIT_OK
    report = json.loads(output.read_text())
    assert [(s["i_minus"], s["i_plus"]) for s in report["segments"]] == [("upper", "middle"), ("middle", "lower")]


def test_decompose_needs_a_catalog(tmp_path):
    config = _write_config(tmp_path)
    assert main(["decompose", str(config), "--log", str(tmp_path), "--eps-sep", "0.01"]) == EXIT_CONFIG


def test_decompose_a_recorded_run(tmp_path):
    config = _write_config(tmp_path)
    assert main(["stationary", str(config), "--label", "sphere", "--output", str(tmp_path)]) == EXIT_OK
    assert main(["flow", str(config), "--output", str(tmp_path / "run")]) == EXIT_OK
    catalog = tmp_path / "catalog.yaml"
    catalog.write_text(f"entries:\n  - label: sphere\n    path: {tmp_path / 'sphere.json'}\n", encoding="utf-8")
    output = tmp_path / "decomposition.json"
    argv = ["decompose", str(config), "--catalog", str(catalog), "--log", str(tmp_path / "run")]
    assert main(argv + ["--eps-sep", "0.001", "--output", str(output)]) == EXIT_OK
    report = json.loads(output.read_text())
    assert [(s["i_minus"], s["i_plus"]) for s in report["segments"]] == [("sphere", "sphere")]


def test_check_single_audit(tmp_path):
    output = tmp_path / "audit.json"
    assert main(["check", "--only", "sphere_curvature", "--output", str(output)]) == EXIT_OK
    report = json.loads(output.read_text())
    assert [check["name"] for check in report["checks"]] == ["sphere_curvature"]


def test_check_detects_flipped_second_form():
    assert main(["check", "--only", "sphere_curvature", "--mutate", "flip-second-form"]) == EXIT_VIOLATION


def test_unknown_subcommand_exits():
    with pytest.raises(SystemExit):
        main(["unknown"])


@pytest.mark.slow
def test_flow_extinction_is_not_a_failure(tmp_path):
    text = EQUILIBRIUM_CONFIG.replace("max_steps: 50", "max_steps: 20000")
    config = _write_config(tmp_path, text + "surface:\n  radius_offset: -0.02\n")
    assert main(["flow", str(config), "--output", str(tmp_path / "run")]) == EXIT_OK
    summary = json.loads((tmp_path / "run" / "summary.json").read_text())
    assert summary["reason"] == "extinction"


def test_sweep_configs_are_seeded_perturbations(tmp_path):
    config = load_config(_write_config(tmp_path))
    configs = sweep_configs(config, 3)
    assert [cfg.seed for cfg in configs] == [config.seed, config.seed + 1, config.seed + 2]
    assert all(cfg.surface.random_harmonics == 1 for cfg in configs)
    assert config.surface.random_harmonics == 0


def test_sweep_members_start_from_different_surfaces():
    config = load_config(CONFIGS / "sphere.yaml")
    assert config.surface.harmonics
    surfaces = [build_initial_surface(cfg) for cfg in sweep_configs(config, 3)]
    for k, first in enumerate(surfaces):
        for second in surfaces[k + 1 :]:
            assert not np.array_equal(first.rho, second.rho)


def test_sweep_needs_a_random_amplitude(tmp_path):
    config = load_config(_write_config(tmp_path, EQUILIBRIUM_CONFIG + "surface:\n  random_amplitude: 0.0\n"))
    with pytest.raises(ConfigurationError):
        sweep_configs(config, 2)
    assert len(sweep_configs(config, 1)) == 1


def test_output_directory_falls_back_to_settings(tmp_path, monkeypatch):
    config = load_config(CONFIGS / "equilibrium.yaml")
    monkeypatch.setattr(settings, "OUTPUT_DIR", str(tmp_path / "fallback"))
    bare = config.model_copy(update={"output": OutputSpec()})
    assert output_directory(bare) == tmp_path / "fallback"
    assert output_directory(bare, tmp_path / "cli") == tmp_path / "cli"
    configured = config.model_copy(update={"output": OutputSpec(directory=tmp_path / "config")})
    assert output_directory(configured) == tmp_path / "config"
