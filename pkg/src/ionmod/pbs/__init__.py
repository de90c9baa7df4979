"""Particle-based Monte Carlo simulator (compiled kernel with NumPy fallback)."""
from .core import (
    BACKEND,
    PbsConfig,
    PbsState,
    ReleaseEstimate,
    backend_name,
    generate,
    init_state,
    initial_count,
    run,
    step,
    trial_rng,
)

__all__ = [
    "BACKEND",
    "PbsConfig",
    "PbsState",
    "ReleaseEstimate",
    "backend_name",
    "generate",
    "init_state",
    "initial_count",
    "run",
    "step",
    "trial_rng",
]
