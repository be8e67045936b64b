"""Spectral toolkit for weakly nonlinear Rayleigh pulses on hyperelastic half-spaces."""

from .material import (
    ConstitutiveError,
    InternalConsistencyError,
    MaterialConstants,
    ModalData,
    RayleighData,
    compute_c0,
    group_velocity,
    modal_frame,
    profile_V,
    profile_rhat,
    solve_rayleigh,
    wave_speeds,
)

__version__ = "0.1.0"
