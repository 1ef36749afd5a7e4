import re
from typing import Any, Dict, Optional

import numpy as np
from pydantic import BaseModel, ValidationError

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2
EXIT_LIBRARY = 3


class ErrorResponse(BaseModel):
    """
    Standard error response model
    """

    error_code: str
    message: str
    details: Optional[Dict[str, Any]] = None


class HypflowException(Exception):
    """
    Base exception for library errors
    """

    default_code = "HYPFLOW_ERROR"
    default_exit_code = EXIT_LIBRARY

    def __init__(
        self,
        message: str,
        error_code: Optional[str] = None,
        exit_code: Optional[int] = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        error_response = ErrorResponse(
            error_code=error_code or self.default_code, message=message, details=details
        )
        super().__init__(message)
        self.error_code = error_response.error_code
        self.message = message
        self.exit_code = self.default_exit_code if exit_code is None else exit_code
        self.details = details
        self.detail = error_response.model_dump()


class DomainError(HypflowException):
    """Argument outside the domain of a formula (e.g. a point outside the open ball)."""

    default_code = "DOMAIN_ERROR"


class DegeneracyError(HypflowException):
    """Degenerate induced metric or colliding nodes."""

    default_code = "NUMERICAL_DEGENERACY"


class EstimationError(HypflowException):
    """Iterative radius estimation did not converge; details carry the best bound."""

    default_code = "ESTIMATION_ERROR"


class BlowUpError(HypflowException):
    default_code = "CURVATURE_BLOW_UP"


class ConvergenceError(HypflowException):
    default_code = "NO_CONVERGENCE"


class PreconditionError(HypflowException):
    default_code = "PRECONDITION_FAILED"


class RangeError(HypflowException):
    default_code = "OUT_OF_RANGE"


class DenserLogRequired(HypflowException):
    """Snapshots too sparse in time for differencing."""

    default_code = "REQUEST_DENSER_LOG"


class ConfigurationError(HypflowException):
    default_code = "CONFIGURATION_ERROR"
    default_exit_code = EXIT_CONFIG


class AdmissionError(HypflowException):
    """Initial surface rejected before any flow step."""

    default_code = "ADMISSION_REJECTED"
    default_exit_code = EXIT_CONFIG


class DecompositionError(HypflowException):
    default_code = "DECOMPOSITION_ERROR"


def _line_of_key(source_text: str, key: str) -> Optional[int]:
    pattern = re.compile(rf"^\s*-?\s*{re.escape(key)}\s*:")
    for lineno, line in enumerate(source_text.splitlines(), start=1):
        if pattern.match(line):
            return lineno
    return None


def handle_validation_error(
    exc: ValidationError, source_text: Optional[str] = None
) -> ConfigurationError:
    """
    Convert Pydantic validation errors to a configuration error with line context
    """
    error_details: Dict[str, Any] = {}
    for error in exc.errors():
        path = ".".join(str(part) for part in error["loc"])
        entry: Dict[str, Any] = {"type": error["type"], "msg": error["msg"]}
        if source_text is not None:
            keys = [part for part in error["loc"] if isinstance(part, str)]
            if keys:
                entry["line"] = _line_of_key(source_text, keys[-1])
        error_details[path or "<root>"] = entry

    return ConfigurationError(
        "Invalid experiment configuration",
        error_code="VALIDATION_ERROR",
        details=error_details,
    )


def numerical_error_handler(error: Exception) -> HypflowException:
    """
    Convert floating point and linear algebra failures to library errors
    """
    if isinstance(error, HypflowException):
        return error
    if isinstance(error, np.linalg.LinAlgError):
        return DegeneracyError(
            "Linear algebra failure on a degenerate surface",
            details={"original_error": str(error)},
        )
    if isinstance(error, FloatingPointError):
        return DomainError(
            "Floating point failure, likely too close to the ideal boundary",
            details={"original_error": str(error)},
        )

    return HypflowException(
        "An unexpected error occurred during the computation",
        details={"original_error": str(error)},
    )
