"""
Exception hierarchy for tumordde.

Every error carries the process exit status the CLI reports for it:
2 for validation problems, 3 for numeric failures, 4 for output problems.
"""

from typing import Any, Dict, Optional


class TumorDDEError(Exception):
    """Base class for all tumordde errors."""

    exit_code = 1

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context = context or {}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": self.message,
            "context": self.context,
        }


# ------------------------
# Validation (exit 2)
# ------------------------
class ValidationFailure(TumorDDEError, ValueError):
    exit_code = 2


class ConfigError(ValidationFailure):
    """Malformed run configuration or conflicting flags."""


class InadmissibleParameters(ValidationFailure):
    """Parameters violate b2/b1 < b4/b3 < a1/a2."""


class DomainError(ValidationFailure):
    """A function was evaluated outside its domain (e.g. at a pole)."""


# ------------------------
# Numeric failures (exit 3)
# ------------------------
class NumericFailure(TumorDDEError, ArithmeticError):
    exit_code = 3


class NoCrossing(NumericFailure):
    """No purely imaginary root crosses for the requested configuration."""


class Degenerate(NumericFailure):
    """Transversality speed vanishes at the crossing."""


class AmbiguousBranch(NumericFailure):
    """Several crossing frequencies exist where one was required."""


class SingularEigenvector(NumericFailure):
    """A closed-form eigenvector denominator vanishes."""


class SingularE(NumericFailure):
    """An E-vector denominator vanishes (resonance)."""


class DegenerateTransversality(NumericFailure):
    """Re lambda' is zero, so the direction quantity is undefined."""


class ZeroDenominator(NumericFailure):
    """The d(lambda)/d(tau1) quotient has a vanishing denominator."""


class InsufficientData(NumericFailure):
    """A trajectory is too short or blew up before it could be summarized."""


class ConvergenceFailure(NumericFailure):
    """Newton iteration did not converge from its seed."""


# ------------------------
# Output (exit 4)
# ------------------------
class OutputError(TumorDDEError, OSError):
    exit_code = 4
