"""Fast/slow splits of the linear operator and the leading nonlinear forms.

With ``D = S + F / eps`` the linear operator ``d_tt - c0 : D D`` splits as
``L_ss + L_fs / eps + L_ff / eps^2``.  The quadratic forms are

    N(u) = -d : (F u)(F F u)          interior
    n(u) = d_{a2..} (F u)(F u) / 2    boundary

where ``F u`` is the fast spatial gradient ``(d_theta, d_z)``.
"""

from __future__ import annotations

import numpy as np

from .fields import DerivSet
from .svk import SVKModel


def _linear(ds: DerivSet, model: SVKModel, part: str) -> np.ndarray:
    tt = ds.second(0, 0, part)
    H = ds.hess(part=part)
    return tt - np.einsum("ajbl,bjl...->a...", model.c0, H)


def L_ss(ds: DerivSet, model: SVKModel) -> np.ndarray:
    return _linear(ds, model, "ss")


def L_fs(ds: DerivSet, model: SVKModel) -> np.ndarray:
    return _linear(ds, model, "sf")


def L_ff(ds: DerivSet, model: SVKModel) -> np.ndarray:
    return _linear(ds, model, "ff")


def L_full(ds: DerivSet, model: SVKModel, eps: float) -> np.ndarray:
    """``d_tt u - c0 : D_eps D_eps u`` assembled from full scaled derivatives."""
    tt = ds.d2(0, 0, eps)
    H = ds.hess(eps)
    return tt - np.einsum("ajbl,bjl...->a...", model.c0, H)


def N_fast(ds: DerivSet, model: SVKModel) -> np.ndarray:
    v = ds.grad(part="f")
    H = ds.hess(part="ff")
    return -np.einsum("ajblgp,gp...,bjl...->a...", model.d, v, H)


def ell_s(ds: DerivSet, model: SVKModel) -> np.ndarray:
    return model.h_lin(ds.grad(part="s"))


def ell_f(ds: DerivSet, model: SVKModel) -> np.ndarray:
    return model.h_lin(ds.grad(part="f"))


def n_fast(ds: DerivSet, model: SVKModel) -> np.ndarray:
    return model.h_quad(ds.grad(part="f"))


def nonlinear_interior(ds: DerivSet, model: SVKModel, eps: float):
    """``(-L(v) : H, -Q(v) : H)`` with ``v = D_eps u``, ``H = D_eps^2 u``."""
    v = ds.grad(eps)
    H = ds.hess(eps)
    lin = -np.einsum("ajbl...,bjl...->a...", model.L(v), H)
    quad = -np.einsum("ajbl...,bjl...->a...", model.Q(v), H)
    return lin, quad


def full_interior(ds: DerivSet, model: SVKModel, eps: float) -> np.ndarray:
    """``d_tt u - c(D_eps u) : D_eps^2 u`` evaluated directly."""
    v = ds.grad(eps)
    H = ds.hess(eps)
    return ds.d2(0, 0, eps) - np.einsum("ajbl...,bjl...->a...", model.elasticity(v), H)
