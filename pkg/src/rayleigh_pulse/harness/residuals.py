"""Grouped interior and boundary residuals of the approximate solution.

Each function returns a dict of named physical fields ``(2, N_x1, N_theta)``.
The analytic groups add up to ``F_a`` (interior) or ``h_a`` (boundary).  The
finite band adds one numerical group on each side (``truncation``, the
out-of-band quadratic content, and ``solvability``, the cokernel defect of
the boundary solve).  ``identity`` is the direct residual minus all groups.
"""

from __future__ import annotations

from typing import Dict, Optional

import numpy as np

from .. import spectral as sp
from ..corrector.profiles import unband
from . import operators as ops
from .fields import ProfileFields
from .svk import SVKModel

INTERIOR_GROUPS = ("L_ss", "L_fs_tau", "Q", "L_minus_N", "cutoff")
BOUNDARY_GROUPS = ("ell_s_tau", "cubic", "q_minus_n", "cutoff")


def theta_multiplier(fields: ProfileFields, field: np.ndarray, mult: np.ndarray) -> np.ndarray:
    """Apply a Fourier multiplier in ``theta`` (given on the full ``k`` grid)."""
    g = fields.grid
    return sp.theta_inverse(g, sp.theta_transform(g, field) * mult, real=True)


def _out_of_band(fields: ProfileFields) -> np.ndarray:
    return (np.abs(fields.grid.n_k) > fields.grid.K_band).astype(float)


def interior_residual(fields: ProfileFields, model: SVKModel, z: float) -> Dict[str, np.ndarray]:
    """Interior groups at depth ``z`` (so ``x2 = eps z``).

    ``total`` is ``d_tt u_a - c(D u_a) : D^2 u_a`` evaluated directly;
    ``L_ff_sigma`` is the leading-order exactness check.
    """
    eps = fields.eps
    s, t, a = fields.u_a(z)
    k = fields.grid.k
    chi = fields.chi_of(k)
    N = ops.N_fast(s, model)
    lin, quad = ops.nonlinear_interior(a, model, eps)
    Lfs_s = ops.L_fs(s, model)
    out = {
        "L_ss": ops.L_ss(a, model),
        "L_fs_tau": eps * eps * ops.L_fs(t, model),
        "Q": quad,
        "L_minus_N": lin - eps * N,
        "cutoff": eps * theta_multiplier(fields, Lfs_s + N, 1.0 - chi),
        "truncation": eps * theta_multiplier(fields, N, chi * _out_of_band(fields)),
    }
    total = ops.full_interior(a, model, eps)
    out["F_a"] = sum(out[g] for g in INTERIOR_GROUPS)
    out["total"] = total
    out["identity"] = total - out["F_a"] - out["truncation"]
    out["L_ff_sigma"] = ops.L_ff(s, model)
    return out


def boundary_residual(fields: ProfileFields, model: SVKModel,
                      G: Optional[np.ndarray] = None) -> Dict[str, np.ndarray]:
    """Boundary groups at ``x2 = 0``; ``G`` is the physical force ``(2, N_x1, N_theta)``.

    ``total`` is ``h(D u_a) - eps^2 G``; ``ell_f_sigma`` is the exactness check.
    """
    eps = fields.eps
    grid = fields.grid
    s, t, a = fields.u_a(0.0)
    if G is None:
        G = np.zeros((2,) + grid.shape)
    chi = fields.chi_of(grid.k)
    v = a.grad(eps)
    n = ops.n_fast(s, model)
    defect = fields.to_physical(fields.cp.defect * fields.chi)
    out = {
        "ell_s_tau": eps ** 3 * ops.ell_s(t, model),
        "cubic": model.h_cubic(v),
        "q_minus_n": model.h_quad(v) - eps * eps * n,
        "cutoff": eps * eps * theta_multiplier(fields, ops.ell_s(s, model) + n - G, 1.0 - chi),
        "solvability": eps * eps * (theta_multiplier(fields, n - G, chi * _out_of_band(fields))
                                    - defect),
    }
    total = model.h(v) - eps * eps * G
    out["h_a"] = sum(out[g] for g in BOUNDARY_GROUPS)
    out["total"] = total
    out["identity"] = total - out["h_a"] - out["solvability"]
    out["ell_f_sigma"] = ops.ell_f(s, model)
    return out
