"""Exception hierarchy shared by every module."""

from __future__ import annotations


class FracRDSError(Exception):
    """Base class for all package errors."""


class ConfigError(FracRDSError, ValueError):
    """Invalid parameters, constants or experiment configuration."""


class GridError(FracRDSError, IndexError):
    """Time not aligned with the grid, or outside the sampled window."""


class PreconditionError(FracRDSError, ValueError):
    """Input violates a documented precondition (e.g. non-solenoidal state)."""


class NumericalError(FracRDSError, ArithmeticError):
    """A computation failed numerically; carries structured context."""

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.context = context


class EmbeddingError(NumericalError):
    """Circulant embedding or Cholesky factorization is not positive."""


class TransformOverflowError(NumericalError, OverflowError):
    """exp(beta * omega) would overflow double precision."""


class NewtonConvergenceError(NumericalError):
    """Newton iteration did not converge within the iteration budget."""


class BlowUpError(NumericalError):
    """The H-norm of the state exceeded the blow-up threshold."""


class EnergyViolationError(NumericalError):
    """Discrete energy inequality violated beyond tolerance."""
