"""Traveling waves of a lattice SIR model with demography.

Modules:

* :mod:`latwave.model` - parameters, endemic state, minimal speed, roots.
* :mod:`latwave.sandwich` - explicit upper/lower solutions and their checks.
* :mod:`latwave.profile_solver` - wave profiles by monotone iteration.
* :mod:`latwave.lds` - time integration of the lattice and front tracking.
* :mod:`latwave.estimators` - scikit-learn style wrappers.
* :mod:`latwave.cli` - the ``latwave`` command.
"""

from .exceptions import LatwaveError, NumericalFailure, ValidationError
from .model import (
    ModelParams,
    certify_nonexistence,
    char_psi,
    dispersion,
    endemic_state,
    lambda_roots,
    minimal_speed,
    omega_roots,
    validate_params,
)
from .sandwich import GridSpec, SandwichParams, select_parameters, verify_inequalities
from .profile_solver import WaveProfile, solve_minimal_wave, solve_wave
from .lds import SimConfig, init_state, integrate, track_front, wave_shape_check

__version__ = "0.1.0"

__all__ = [
    "GridSpec",
    "LatwaveError",
    "ModelParams",
    "NumericalFailure",
    "SandwichParams",
    "SimConfig",
    "ValidationError",
    "WaveProfile",
    "certify_nonexistence",
    "char_psi",
    "dispersion",
    "endemic_state",
    "init_state",
    "integrate",
    "lambda_roots",
    "minimal_speed",
    "omega_roots",
    "select_parameters",
    "solve_minimal_wave",
    "solve_wave",
    "track_front",
    "validate_params",
    "verify_inequalities",
    "wave_shape_check",
]
