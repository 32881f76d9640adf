"""Exception types shared across modules."""


class ModumechError(Exception):
    """Base class for all package errors."""


class DimensionError(ModumechError, ValueError):
    """Invalid or mismatched Hilbert-space dimension."""


class PhysicsGuardError(ModumechError, ValueError):
    """A physical validity guard was violated (truncation, flux branch, ...)."""


class TruncationError(PhysicsGuardError):
    """Population in the highest retained Fock level exceeds the tail tolerance."""

    def __init__(self, message, tail_mass=None, mode=None):
        super().__init__(message)
        self.tail_mass = tail_mass
        self.mode = mode


class FluxBranchError(PhysicsGuardError):
    """Flux outside the branch where cos(pi*phi) is positive."""


class StepControlError(ModumechError, RuntimeError):
    """Time stepping failed to converge before the step budget ran out."""
