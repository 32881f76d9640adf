"""Simulation and optimal control of an LC mode coupled to a mechanical oscillator
through ``g a^dag a (b + b^dag)``, with coupling modulation and circuit estimates."""

__version__ = "0.1.0"

from . import circuit, control, dynamics, hilbert, kernels, modulation  # noqa: E402,F401
from .errors import (  # noqa: E402,F401
    DimensionError,
    FluxBranchError,
    ModumechError,
    PhysicsGuardError,
    StepControlError,
    TruncationError,
)
