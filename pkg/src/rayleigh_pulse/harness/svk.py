"""Saint Venant-Kirchhoff constitutive model in two dimensions.

Gradients ``v[alpha, j] = d_j u_alpha`` carry the ``(2, 2)`` matrix axes
first; any trailing axes are sample points.  Everything is in units with
``c_S = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..kernels.elementary import CubicCoefficients, d_full
from ..material import MaterialConstants

_I2 = np.eye(2)


def _deform(v):
    v = np.asarray(v)
    eye = _I2.reshape((2, 2) + (1,) * (v.ndim - 2))
    return eye + v


def green_strain(v):
    """``E = (A + A^T + A^T A) / 2``."""
    F = _deform(v)
    return 0.5 * (np.einsum("ka...,kb...->ab...", F, F) - _I2.reshape((2, 2) + (1,) * (F.ndim - 2)))


def _stress2(lam, mu, E):
    tr = E[0, 0] + E[1, 1]
    eye = _I2.reshape((2, 2) + (1,) * (E.ndim - 2))
    return lam * tr * eye + 2.0 * mu * E


def svk_energy(lam, mu, v):
    E = green_strain(v)
    tr = E[0, 0] + E[1, 1]
    return 0.5 * lam * tr * tr + mu * np.einsum("ab...,ab...->...", E, E)


def svk_stress(lam, mu, v):
    """First Piola stress ``dW/dv = (I + A) S``."""
    F = _deform(v)
    S = _stress2(lam, mu, green_strain(v))
    return np.einsum("am...,mj...->aj...", F, S)


def svk_elasticity(lam, mu, v):
    """``c_{a j b l}(v) = d^2 W / dv_{aj} dv_{bl}`` in closed form."""
    F = _deform(v)
    S = _stress2(lam, mu, green_strain(v))
    FFt = np.einsum("am...,bm...->ab...", F, F)
    return (np.einsum("ab,jl...->ajbl...", _I2, S)
            + lam * np.einsum("aj...,bl...->ajbl...", F, F)
            + mu * (np.einsum("al...,bj...->ajbl...", F, F)
                    + np.einsum("ab...,jl->ajbl...", FFt, _I2)))


def _unit(a, j):
    out = np.zeros((2, 2))
    out[a, j] = 1.0
    return out


@dataclass
class SVKModel:
    """Polynomial stored energy ``W = W2 + W3 + W4`` and its derivatives.

    ``c(v) = c0 + d.v + e.v.v / 2``; the third-order tensor ``d`` may be
    replaced by the isotropic family of ``CubicCoefficients`` while the
    quartic part stays SVK.
    """

    mc: MaterialConstants
    cc: CubicCoefficients
    lam: float
    mu: float
    c0: np.ndarray
    d: np.ndarray
    e: np.ndarray
    overridden: bool = False

    # ---------------------------------------------------------- energy side
    def energy(self, v):
        v = np.asarray(v)
        w2 = 0.5 * np.einsum("ajbl,aj...,bl...->...", self.c0, v, v)
        w3 = np.einsum("ajblgp,aj...,bl...,gp...->...", self.d, v, v, v) / 6.0
        w4 = np.einsum("ajblgpdq,aj...,bl...,gp...,dq...->...", self.e, v, v, v, v) / 24.0
        return w2 + w3 + w4

    def stress(self, v):
        v = np.asarray(v)
        return (np.einsum("ajbl,bl...->aj...", self.c0, v)
                + 0.5 * np.einsum("ajblgp,bl...,gp...->aj...", self.d, v, v)
                + np.einsum("ajblgpdq,bl...,gp...,dq...->aj...", self.e, v, v, v) / 6.0)

    def elasticity(self, v):
        v = np.asarray(v)
        return self.c0.reshape(self.c0.shape + (1,) * (v.ndim - 2)) + self.L(v) + self.Q(v)

    # ------------------------------------------------------------- splits
    def L(self, v):
        """Linear part ``d.v`` of ``c(v)``."""
        return np.einsum("ajblgp,gp...->ajbl...", self.d, v)

    def Q(self, v):
        """Quadratic part ``e.v.v / 2`` of ``c(v)``."""
        return 0.5 * np.einsum("ajblgpdq,gp...,dq...->ajbl...", self.e, v, v)

    def h(self, v):
        """Boundary traction ``P_{a2}(v)``."""
        return self.stress(v)[:, 1]

    def h_lin(self, v):
        return np.einsum("alm,lm...->a...", self.c0[:, 1], v)

    def h_quad(self, v):
        return 0.5 * np.einsum("acdef,cd...,ef...->a...", self.d[:, 1], v, v)

    def h_cubic(self, v):
        return np.einsum("acdefgh,cd...,ef...,gh...->a...", self.e[:, 1], v, v, v) / 6.0


def _polarize(cfun):
    c0 = cfun(np.zeros((2, 2)))
    d = np.zeros((2, 2, 2, 2, 2, 2))
    cu = {}
    for g in range(2):
        for p in range(2):
            cu[g, p] = cfun(_unit(g, p))
            d[..., g, p] = 0.5 * (cu[g, p] - cfun(-_unit(g, p)))
    e = np.zeros((2,) * 8)
    for g in range(2):
        for p in range(2):
            for s in range(2):
                for q in range(2):
                    e[..., g, p, s, q] = (cfun(_unit(g, p) + _unit(s, q))
                                          - cu[g, p] - cu[s, q] + c0)
    return c0, d, e


def svk_tensors(mc: MaterialConstants, cc: Optional[CubicCoefficients] = None) -> SVKModel:
    """Normalized SVK model; ``cc`` overrides the cubic part of ``W``.

    ``c(v)`` is quadratic in ``v``, so central differences with unit steps
    and polarization recover ``d`` and ``e`` exactly from the closed form.
    """
    lam = mc.lam / mc.mu
    mu = 1.0
    c0, d, e = _polarize(lambda v: svk_elasticity(lam, mu, v))
    svk_cc = CubicCoefficients.svk(mc)
    overridden = False
    if cc is not None and not np.allclose(cc.as_array(), svk_cc.as_array()):
        d = np.real(d_full(cc.normalized(mc.mu)))
        overridden = True
    return SVKModel(mc=mc, cc=cc if cc is not None else svk_cc, lam=lam, mu=mu,
                    c0=c0, d=d, e=e, overridden=overridden)
