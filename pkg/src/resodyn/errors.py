"""Exception hierarchy.

Validation problems (bad inputs, malformed configs) and numerical failures
(divergent integrals, defective matrices) are kept in separate branches so
the CLI can map them onto distinct exit codes.
"""

from __future__ import annotations


class ResodynError(Exception):
    """Base class for all library errors."""


class ValidationError(ResodynError):
    """Invalid input or configuration.

    ``field`` optionally carries a dotted path into the offending config
    block (e.g. ``"thermal.beta"``).
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class InvalidStateError(ValidationError):
    """A density matrix or state vector violates its invariants."""


class NumericalError(ResodynError):
    """Base class for numerical failures (CLI exit code 3)."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not converge; carries the achieved estimate."""

    def __init__(self, message: str, estimate: float | None = None):
        super().__init__(message)
        self.estimate = estimate


class DivergentIntegralError(NumericalError):
    """Integral diverges for the given form factor; names the offending term."""

    def __init__(self, message: str, term: str | None = None):
        super().__init__(message)
        self.term = term


class InfiniteRateError(NumericalError):
    """A level-shift entry requires the infinite thermal zero-limit."""


class NonSemisimpleError(NumericalError):
    """Level shift operator is (numerically) defective; no biorthogonal basis."""


class SignViolationError(NumericalError):
    """A resonance energy acquired a negative imaginary part."""


class DegeneracyError(ValidationError):
    """Bohr-frequency clustering is ambiguous at the given tolerance."""
