"""Traveling-wave profiles by monotone iteration on a truncated interval."""

from .diagnostics import endpoint_diagnostics, harnack_constant, tail_diagnostics
from .grid import Grid, Profile
from .iterate import (
    DEFAULT_DELTAS,
    MinimalSequence,
    SolveReport,
    WaveProfile,
    monotone_iterate,
    solve_minimal_wave,
    solve_wave,
)
from .operators import (
    SweepMaps,
    TruncatedProblem,
    apply_F,
    apply_H,
    build_problem,
    check_sandwich,
    ode_residual,
)

__all__ = [
    "DEFAULT_DELTAS",
    "Grid",
    "MinimalSequence",
    "Profile",
    "SolveReport",
    "SweepMaps",
    "TruncatedProblem",
    "WaveProfile",
    "apply_F",
    "apply_H",
    "build_problem",
    "check_sandwich",
    "endpoint_diagnostics",
    "harnack_constant",
    "monotone_iterate",
    "ode_residual",
    "solve_minimal_wave",
    "solve_wave",
    "tail_diagnostics",
]
