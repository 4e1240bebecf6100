"""
Exception hierarchy for the NLS laboratory
Every error carries a machine-readable code and a details dict for manifests
"""

from typing import Any, Dict, Optional


class NLSLabError(Exception):
    """Base class for all laboratory errors"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    @property
    def code(self) -> str:
        return type(self).__name__

    def to_dict(self) -> Dict[str, Any]:
        """Serializable form used by the CLI and run manifests"""
        return {"code": self.code, "message": self.message, "details": self.details}


# Parameter validation


class ParameterError(NLSLabError):
    pass


class NonSymmetricCoupling(ParameterError):
    pass


class NonPositiveCoupling(ParameterError):
    pass


class ExponentOutOfRange(ParameterError):
    pass


class UnsupportedDimension(ParameterError):
    pass


class InadmissibleAlphaBeta(ParameterError):
    pass


class DegenerateAlphaBeta(ParameterError):
    """2α + Nβ = 0; callers should fall back to the T functional"""


# Field state


class FieldError(NLSLabError):
    pass


class PoisonedState(FieldError):
    pass


class ZeroField(FieldError):
    pass


class DegenerateField(FieldError):
    pass


class SupportOverflow(FieldError):
    pass


# Solvers


class SolverError(NLSLabError):
    pass


class NoConvergence(SolverError):
    pass


class CollapseToZero(SolverError):
    pass


class NegativeOmega(SolverError):
    pass


class BracketFailure(SolverError):
    pass


# Diagnostics


class DiagnosticError(NLSLabError):
    pass


class InsufficientRows(DiagnosticError):
    pass


class SignDisagreement(DiagnosticError):
    """K signs differ across the (α,β) test set below the ground-state level"""


# CLI boundary


class ConfigError(NLSLabError):
    pass


class MissingArtifact(NLSLabError):
    pass
