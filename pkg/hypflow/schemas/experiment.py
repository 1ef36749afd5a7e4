from pathlib import Path
from typing import List, Optional

import yaml
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveFloat,
    PositiveInt,
    ValidationError,
    model_validator,
)

from hypflow.core.error_handling import ConfigurationError, handle_validation_error
from hypflow.models.models import ForcingKind, Stencil


class HarmonicSpec(BaseModel):
    degree: int = Field(ge=0, le=16)
    order: int = 0
    amplitude: float

    model_config = ConfigDict(extra="forbid")


class SurfaceSpec(BaseModel):
    """Initial surface: geodesic sphere, optionally perturbed along harmonics"""

    radius: Optional[PositiveFloat] = None
    radius_offset: float = 0.0
    center: Optional[List[float]] = None
    harmonics: List[HarmonicSpec] = []
    random_harmonics: int = Field(default=0, ge=0)
    random_amplitude: NonNegativeFloat = 0.02
    random_max_degree: int = Field(default=3, ge=1, le=8)
    snapshot: Optional[Path] = None

    model_config = ConfigDict(extra="forbid")


class DeclaredBoundsSpec(BaseModel):
    h_min: float
    h_max: float
    gradient: NonNegativeFloat
    hessian: NonNegativeFloat

    @model_validator(mode="after")
    def check_order(self) -> "DeclaredBoundsSpec":
        if self.h_min > self.h_max:
            raise ValueError("h_min must not exceed h_max")
        return self


class ForcingSpec(BaseModel):
    type: ForcingKind = ForcingKind.CONSTANT
    base: PositiveFloat = 25.0
    amplitude: float = 0.0
    width: PositiveFloat = 0.1
    center: Optional[List[float]] = None
    wavevector: Optional[List[float]] = None
    phase: float = 0.0
    working_radius: float = Field(default=0.5773502691896258, gt=0.0, lt=1.0)
    declared: Optional[DeclaredBoundsSpec] = None

    model_config = ConfigDict(extra="forbid")


class IntegratorControls(BaseModel):
    dt_max: PositiveFloat = 1e-3
    c_stab: PositiveFloat = 0.2
    max_steps: PositiveInt = 2000
    t_max: Optional[PositiveFloat] = None
    tol_stationary: Optional[PositiveFloat] = None
    stationary_window: PositiveInt = 50
    curvature_cap: PositiveFloat = 1e6
    extinction_radius: PositiveFloat = 1e-6
    snapshot_every: PositiveInt = 100
    radii_every: PositiveInt = 10
    pinching: float = Field(default=0.5, gt=0.0, lt=1.0)
    curvature_bound: Optional[PositiveFloat] = None
    monotonicity_constant: PositiveFloat = 1.0
    monotonicity_floor: PositiveFloat = 1e-9

    model_config = ConfigDict(extra="forbid")


class StationaryControls(BaseModel):
    tol: PositiveFloat = 1e-10
    max_iterations: PositiveInt = 30
    kernel_tol: PositiveFloat = 1e-3
    min_damping: PositiveFloat = 1.0 / 64.0

    model_config = ConfigDict(extra="forbid")


class OutputSpec(BaseModel):
    directory: Optional[Path] = None
    write_csv: bool = True

    model_config = ConfigDict(extra="forbid")


class ExperimentConfig(BaseModel):
    """Validated experiment document"""

    n: int = Field(default=2, ge=1, le=2)
    resolution: int = Field(default=16, ge=16, le=256)
    stencil: Optional[Stencil] = None
    seed: int = 12345
    surface: SurfaceSpec = SurfaceSpec()
    forcing: ForcingSpec = ForcingSpec()
    integrator: IntegratorControls = IntegratorControls()
    stationary: StationaryControls = StationaryControls()
    output: OutputSpec = OutputSpec()

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def check_dimensions(self) -> "ExperimentConfig":
        for name, vector in (
            ("surface.center", self.surface.center),
            ("forcing.center", self.forcing.center),
            ("forcing.wavevector", self.forcing.wavevector),
        ):
            if vector is not None and len(vector) != self.n + 1:
                raise ValueError(f"{name} must have {self.n + 1} components")
        return self


def config_from_yaml(text: str) -> ExperimentConfig:
    try:
        document = yaml.safe_load(text) or {}
    except yaml.YAMLError as error:
        mark = getattr(error, "problem_mark", None)
        raise ConfigurationError(
            "Malformed YAML in experiment configuration",
            details={"line": None if mark is None else mark.line + 1, "error": str(error)},
        ) from error
    if not isinstance(document, dict):
        raise ConfigurationError("Experiment configuration must be a mapping", details={"line": 1})
    try:
        return ExperimentConfig.model_validate(document)
    except ValidationError as error:
        raise handle_validation_error(error, text) from error


def load_config(path: Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as error:
        raise ConfigurationError("Cannot read configuration file", details={"path": str(path)}) from error
    return config_from_yaml(text)


def config_to_yaml(config: ExperimentConfig) -> str:
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False)


class CatalogEntrySpec(BaseModel):
    label: str = Field(min_length=1)
    path: Path

    model_config = ConfigDict(extra="forbid")


class CatalogSpec(BaseModel):
    """Stationary surfaces used to label plateaus; paths hold snapshots or stationary reports"""

    entries: List[CatalogEntrySpec] = []

    model_config = ConfigDict(extra="forbid")


def load_catalog_spec(path: Path) -> CatalogSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
        document = yaml.safe_load(text) or {}
    except (OSError, yaml.YAMLError) as error:
        raise ConfigurationError(
            "Cannot read catalog file", details={"path": str(path), "error": str(error)}
        ) from error
    try:
        return CatalogSpec.model_validate(document)
    except ValidationError as error:
        raise handle_validation_error(error, text) from error
