from pathlib import Path
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, field_validator

from hypflow.models.models import Stencil, TerminationReason, Violation


class SurfaceSnapshot(BaseModel):
    """Radial graph on disk; floats are written in shortest round-trip form"""

    n: int = Field(ge=1, le=2)
    grid_shape: List[int]
    stencil: Stencil
    rho: List[float]
    center: List[float]
    time: Optional[float] = None
    step: Optional[int] = None

    @field_validator("grid_shape")
    @classmethod
    def validate_grid_shape(cls, value: List[int]) -> List[int]:
        if any(size <= 0 for size in value):
            raise ValueError("grid sizes must be positive")
        return value


class StepRecord(BaseModel):
    """One accepted flow step"""

    kind: Literal["step"] = "step"
    step: int
    t: float
    dt: float
    V: float
    H_min: float
    H_max: float
    pinch: float
    outradius: float
    inradius: Optional[float] = None
    maxA: float
    residual: float

    model_config = ConfigDict(frozen=True)


class TerminationRecord(BaseModel):
    kind: Literal["termination"] = "termination"
    reason: TerminationReason
    step: int
    t: float
    message: str = ""
    violations: List[Violation] = []


LogLine = Annotated[Union[StepRecord, TerminationRecord], Field(discriminator="kind")]
log_line_adapter: TypeAdapter[LogLine] = TypeAdapter(LogLine)


def write_model(model: BaseModel, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=2), encoding="utf-8")


def read_snapshot(path: Path) -> SurfaceSnapshot:
    return SurfaceSnapshot.model_validate_json(path.read_text(encoding="utf-8"))
