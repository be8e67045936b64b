"""Constitutive model, profile residuals and the eps sweep."""

from .svk import SVKModel, green_strain, svk_elasticity, svk_energy, svk_stress, svk_tensors
from .fields import DerivSet, ProfileFields
from .operators import L_ff, L_fs, L_full, L_ss, N_fast, ell_f, ell_s, n_fast
from .residuals import BOUNDARY_GROUPS, INTERIOR_GROUPS, boundary_residual, interior_residual
from .report import ExponentCheck, FloorCheck, ResidualReport
from .sweep import (ArrayForce, ForceSpec, ProfileBundle, build_bundle, bundle_from_state,
                    predicted_checks, solve_amplitude, sweep, sweep_point, z_nodes, z_panels)
