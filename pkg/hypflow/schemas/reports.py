from pathlib import Path
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict

from hypflow.models.models import SurfaceDiagnostics, TerminationReason, Violation
from hypflow.schemas.experiment import ForcingSpec
from hypflow.schemas.records import SurfaceSnapshot


class BoundsCheck(BaseModel):
    """Sampled values against the declared forcing bounds"""

    sampled_h_min: float
    sampled_h_max: float
    sampled_gradient: float
    sampled_hessian: float
    holds: bool


class ClassHReport(BaseModel):
    """Admissibility of a forcing field, with margins (positive means satisfied)"""

    member: bool
    coth_threshold: float
    curvature_margin: float
    gradient_margin: float
    hessian_margin: float
    above_two: bool
    epsilon: float


class SelectionCheck(BaseModel):
    """Exhaustive verification of a controlled-growth point selection"""

    start: int
    selected: int
    jumps: int
    value_grows: bool
    ball_contained: bool
    locally_bounded: bool

    @property
    def passed(self) -> bool:
        return self.value_grows and self.ball_contained and self.locally_bounded


class ResidualPair(BaseModel):
    t: float
    dt: float
    trace_residual: float
    tensor_residual: Optional[float] = None
    scale: float


class EvolutionResidualReport(BaseModel):
    pairs: List[ResidualPair]
    max_trace_residual: float
    max_tensor_residual: Optional[float] = None


class DissipationPair(BaseModel):
    t: float
    dt: float
    volume_rate: float
    dissipation: float


class DissipationReport(BaseModel):
    pairs: List[DissipationPair]
    max_relative_error: float


class NondegeneracyReport(BaseModel):
    kernel_tol: float
    kernel_count: int
    near_zero: List[float]
    lowest_eigenvalues: List[float]


class StationaryReport(BaseModel):
    """Stationary surface plus its linearization summary"""

    surface: SurfaceSnapshot
    forcing: ForcingSpec
    residual: float
    newton_steps: int
    kernel_count: int
    lowest_eigenvalues: List[float]
    mean_radius: float
    modified_volume: float
    label: Optional[str] = None


class RunSummary(BaseModel):
    reason: TerminationReason
    steps: int
    final_time: float
    message: str = ""
    violations: List[Violation] = []
    final: Optional[SurfaceDiagnostics] = None
    log_path: Optional[Path] = None
    csv_path: Optional[Path] = None

    @property
    def has_violations(self) -> bool:
        return any(violation.severity == "violation" for violation in self.violations)


class SegmentRecord(BaseModel):
    i_minus: str
    i_plus: str
    V_minus: float
    V_plus: float
    t_shift: float

    model_config = ConfigDict(frozen=True)


class DecompositionReport(BaseModel):
    segments: List[SegmentRecord]
    eps_sep: float
    tolerances: Dict[str, float]
    shift_times: List[List[float]] = []


class AuditCheck(BaseModel):
    name: str
    passed: bool
    value: Optional[float] = None
    threshold: Optional[float] = None
    message: str = ""


class AuditReport(BaseModel):
    checks: List[AuditCheck]
    passed: bool
    resolution_scale: float = 1.0
    mutation: Optional[str] = None
