"""Shared exception types."""


class ConeError(ValueError):
    """An argument lies outside the symmetric-function cone required by the operation."""


class StructureError(RuntimeError):
    """Quaternionic structure violated: eigenvalue multiplicities or the
    j-pairing of the complex embedding do not match a hyperhermitian input."""


class SamplingError(RuntimeError):
    """Rejection sampling exhausted its retry budget."""


class ConvergenceError(RuntimeError):
    """Newton iteration failed: iteration cap, damping underflow, or cone exit."""
