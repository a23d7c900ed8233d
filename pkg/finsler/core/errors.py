"""
Exception hierarchy
"""
from typing import Optional, Sequence


class FinslerError(Exception):
    """Base class for every error raised by the toolkit"""


class DomainError(FinslerError, ValueError):
    """A sample (or an intermediate value) left the real domain of a program"""


class NonPositive(DomainError):
    """F^2 <= 0 at a sample of a convolution metric"""


class DivisionDomain(DomainError):
    """A ratio was requested where its denominator vanishes"""


class SingularMatrix(FinslerError):
    """Pivot below the singularity threshold"""


class InvalidParameter(FinslerError, ValueError):
    """Metric or field parameter outside its admissible range"""


class RandersInvalid(InvalidParameter):
    """||beta||_alpha >= 1 at a base point"""

    def __init__(self, message: str, witness: Optional[Sequence[float]] = None, norm: Optional[float] = None):
        super().__init__(message)
        self.witness = None if witness is None else [float(v) for v in witness]
        self.norm = norm


class InsufficientSamples(FinslerError):
    """Not enough valid samples to run a probe"""
