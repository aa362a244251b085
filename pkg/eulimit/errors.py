"""
Exception hierarchy for eulimit.

Library code raises these; the CLI maps them onto exit codes.
"""

from typing import Optional, Sequence


class EulimitError(Exception):
    """Base class for every error raised by eulimit."""


class DomainError(EulimitError, ValueError):
    """An argument lies outside the domain of the operation."""


class VacuumInvariantError(DomainError):
    """Riemann invariants or eigenvalues requested where they are undefined."""


class UnsupportedThetaError(DomainError):
    """The operation has no isothermal (theta = 0) form."""


class PreconditionError(EulimitError):
    """A documented precondition of an estimate does not hold."""


class QuadratureAccuracyError(EulimitError):
    """The adaptive oracle could not reach the requested tolerance."""

    def __init__(self, message: str, achieved: float, requested: float):
        super().__init__(f"{message} (achieved {achieved:.3e}, requested {requested:.3e})")
        self.achieved = achieved
        self.requested = requested


class RootFindingError(EulimitError):
    """The middle-state iteration did not converge."""

    def __init__(
        self,
        message: str,
        bracket: Sequence[float] = (),
        residuals: Sequence[float] = (),
        iterations: Optional[int] = None,
    ):
        detail = message
        if bracket:
            detail += f"; bracket=[{bracket[0]:.17g}, {bracket[1]:.17g}]"
        if residuals:
            detail += f"; residuals=[{residuals[0]:.3e}, {residuals[1]:.3e}]"
        if iterations is not None:
            detail += f"; iterations={iterations}"
        super().__init__(detail)
        self.bracket = tuple(bracket)
        self.residuals = tuple(residuals)
        self.iterations = iterations


class SchemeFailureError(EulimitError):
    """The finite-volume update produced a negative density."""


class InsufficientDataError(EulimitError):
    """Too few usable points for a rate fit."""


class ConfigError(EulimitError):
    """Invalid run configuration or command-line flags."""
