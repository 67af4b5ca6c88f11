"""Linear stability of symmetric simultaneous-binary-collision periodic orbits
in the planar pairwise symmetric four-body problem, by symmetry reduction."""

from .integrate import DEFAULT_STEP, IntegrationError, StepSpec
from .orbit import OrbitRecord, SymmetricSeed, continue_in_mass, newton_refine, printed_seed, verify_periodicity
from .reduction import ReductionResult, StabilityClass, classify, reduce
from .sweep import SweepConfig, SweepRow, run_sweep

__all__ = [
    "DEFAULT_STEP",
    "IntegrationError",
    "OrbitRecord",
    "ReductionResult",
    "StabilityClass",
    "StepSpec",
    "SweepConfig",
    "SweepRow",
    "SymmetricSeed",
    "classify",
    "continue_in_mass",
    "newton_refine",
    "printed_seed",
    "reduce",
    "run_sweep",
    "verify_periodicity",
]
