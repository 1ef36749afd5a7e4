from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict


class Stencil(str, Enum):
    """Angular differentiation scheme"""

    SPECTRAL = "spectral"
    FD4 = "fd4"


class ForcingKind(str, Enum):
    """Enum for the supported prescribed-curvature fields"""

    CONSTANT = "constant"
    RADIAL_BUMP = "radial-bump"
    HARMONIC_PERTURBATION = "harmonic-perturbation"


class TerminationReason(str, Enum):
    """Enum for the ways a flow run can end"""

    CONVERGED = "converged"
    EXTINCTION = "extinction"
    OUTRADIUS_BREACH = "outradius-breach"
    STEP_LIMIT = "step-limit"
    BLOW_UP = "blow-up"
    DEGENERACY = "degeneracy"


class ViolationKind(str, Enum):
    """Invariants watched along a flow"""

    CONVEXITY_LOST = "convexity-lost"
    PINCHING_LOST = "pinching-lost"
    PINCHING_ENERGY = "pinching-energy"
    CURVATURE_BOUND = "curvature-bound"
    VOLUME_INCREASE = "volume-increase"
    INSCRIBED_BALL = "inscribed-ball"
    ENCLOSING_BALL = "enclosing-ball"
    OUTRADIUS_LIMIT = "outradius-limit"


class Severity(str, Enum):
    VIOLATION = "violation"
    ADVISORY = "advisory"


class Violation(BaseModel):
    """A monitor finding attached to one flow state"""

    kind: ViolationKind
    severity: Severity = Severity.VIOLATION
    value: float
    threshold: float
    message: str
    step: Optional[int] = None
    time: Optional[float] = None

    model_config = ConfigDict(frozen=True)


class SurfaceDiagnostics(BaseModel):
    """Scalar summary of one surface"""

    pinching_ratio: float
    outradius: float
    inradius: Optional[float] = None
    area: float
    enclosed_volume: float
    modified_volume: float
    mean_curvature_min: float
    mean_curvature_max: float
    max_shape_norm: float
    residual: float

    model_config = ConfigDict(frozen=True)


class ForcingBounds(BaseModel):
    """Declared sup-bounds of a forcing field over its working region"""

    h_min: float
    h_max: float
    gradient: float
    hessian: float

    model_config = ConfigDict(frozen=True)
