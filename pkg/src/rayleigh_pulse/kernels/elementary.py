"""Elementary kernels of the quadratic interaction on the resonance set.

The profile factor ``nu_j d_z r_alpha + i xi eta_j r_alpha`` is a two-term
exponential sum in ``z`` with rates ``-omega1 |xi|`` and ``-omega2 |xi|``.
Triple products integrate in closed form, which is how every kernel below
is evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from ..material import MaterialConstants, RayleighData
from .expsum import ExponentialSum

_I2 = np.eye(2)


@dataclass(frozen=True)
class CubicCoefficients:
    """Coefficients of the cubic part of the stored energy.

    ``W3 = beta1 (tr A)^3 + beta2 tr(A) |A|^2 + beta3 tr(A A^T A) + beta4 tr(A^3)``
    with ``A`` the displacement gradient.
    """

    beta1: float
    beta2: float
    beta3: float
    beta4: float

    @classmethod
    def svk(cls, mc: MaterialConstants) -> "CubicCoefficients":
        """Saint Venant-Kirchhoff values ``(0, lambda/2, mu, 0)``."""
        return cls(0.0, 0.5 * mc.lam, mc.mu, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.beta1, self.beta2, self.beta3, self.beta4])

    def normalized(self, mu: float) -> "CubicCoefficients":
        """Divide by ``mu`` (units in which the shear modulus is one)."""
        b = self.as_array() / mu
        return CubicCoefficients(*b)


def d_tensor(kind: int) -> np.ndarray:
    """Kronecker pattern ``d^kind[alpha, j, beta, l, gamma, m]`` (0-based)."""
    d = np.zeros((2,) * 6)
    I = _I2
    for a, j, b, l, g, m in product(range(2), repeat=6):
        if kind == 1:
            v = I[a, j] * I[b, l] * I[g, m]
        elif kind == 2:
            v = I[a, j] * I[b, g] * I[l, m] + I[b, l] * I[a, g] * I[j, m] + I[g, m] * I[a, b] * I[j, l]
        elif kind == 3:
            v = (I[a, b] * (I[g, j] * I[l, m] + I[g, l] * I[j, m])
                 + I[a, g] * (I[b, j] * I[l, m] + I[b, m] * I[j, l])
                 + I[b, g] * (I[a, l] * I[j, m] + I[a, m] * I[j, l]))
        elif kind == 4:
            v = I[a, l] * I[b, m] * I[g, j] + I[a, m] * I[b, j] * I[g, l]
        else:
            raise ValueError("kind must be in 1..4")
        d[a, j, b, l, g, m] = v
    return d


def d_full(cc: CubicCoefficients) -> np.ndarray:
    """Third derivative tensor ``6 b1 d1 + 2 b2 d2 + b3 d3 + 3 b4 d4``."""
    return (6 * cc.beta1 * d_tensor(1) + 2 * cc.beta2 * d_tensor(2)
            + cc.beta3 * d_tensor(3) + 3 * cc.beta4 * d_tensor(4))


def _t_coeffs(rd: RayleighData) -> np.ndarray:
    """Coefficients of (T11, Td1, T1d, Tdd) on (e1, e2), shape (4, 2)."""
    w1, w2 = rd.omega1, rd.omega2
    s = w1 * w1 + 1.0
    return np.array([[2 * w1 * w2, -s],
                     [2.0, -s],
                     [2 * w1 * w1, -s],
                     [2 * w1, -w2 * s]])


def t_profiles(rd: RayleighData, xi: float):
    """``T11, Td1, T1d, Tdd`` as two-term exponential sums in ``z``."""
    if xi == 0:
        raise ValueError("t_profiles undefined at xi = 0")
    rates = -np.array([rd.omega1, rd.omega2]) * abs(xi)
    return tuple(ExponentialSum(row, rates) for row in _t_coeffs(rd))


def factor_coeffs(rd: RayleighData, xi) -> np.ndarray:
    """Coefficients of the factor on ``(e1, e2)``, shape ``xi.shape + (2, 2, 2)``.

    Index order ``[..., alpha, j, e]`` (0-based, ``alpha, j`` in {0, 1}).
    """
    xi = np.asarray(xi, dtype=float)
    T = _t_coeffs(rd)
    w2 = rd.omega2
    ax = np.abs(xi)[..., None]
    out = np.empty(xi.shape + (2, 2, 2), dtype=complex)
    out[..., 0, 0, :] = ax * T[0]
    out[..., 1, 0, :] = 1j * xi[..., None] * w2 * T[1]
    out[..., 0, 1, :] = 1j * xi[..., None] * w2 * T[2]
    out[..., 1, 1, :] = -ax * w2 * T[3]
    return out


def factor(rd: RayleighData, alpha: int, j: int, xi: float) -> ExponentialSum:
    """Profile factor ``nu_j d_z r_alpha + i xi eta_j r_alpha`` (1-based indices)."""
    if alpha not in (1, 2) or j not in (1, 2):
        raise IndexError("alpha and j must be 1 or 2")
    if xi == 0:
        raise ValueError("factor undefined at xi = 0")
    c = factor_coeffs(rd, xi)[alpha - 1, j - 1]
    rates = -np.array([rd.omega1, rd.omega2]) * abs(xi)
    return ExponentialSum(c, rates)


def kernel_from_tensor(d: np.ndarray, rd: RayleighData, x1, x2, x3) -> np.ndarray:
    """Vectorized ``int_0^inf d F(x1) F(x2) F(x3) dz`` for a given tensor ``d``."""
    x1, x2, x3 = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (x1, x2, x3)))
    if np.any(x1 == 0) or np.any(x2 == 0) or np.any(x3 == 0):
        raise ValueError("kernel undefined when a frequency vanishes")
    shape = x1.shape
    x1, x2, x3 = x1.ravel(), x2.ravel(), x3.ravel()
    C1, C2, C3 = (factor_coeffs(rd, x) for x in (x1, x2, x3))
    w = np.array([rd.omega1, rd.omega2])
    s1, s2, s3 = (np.abs(x)[:, None] * w for x in (x1, x2, x3))
    # contracted coefficient of e_a(x1) e_b(x2) e_c(x3)
    coef = np.einsum("ijklmn,Nija,Nklb,Nmnc->Nabc", d, C1, C2, C3, optimize=True)
    denom = s1[:, :, None, None] + s2[:, None, :, None] + s3[:, None, None, :]
    return (coef / denom).sum(axis=(1, 2, 3)).reshape(shape)


def elementary_kernel(kind: int, rd: RayleighData, xi1, xi2, xi3):
    """Elementary kernel ``b^kind`` by exact exponential integration."""
    out = kernel_from_tensor(d_tensor(kind), rd, xi1, xi2, xi3)
    return out[()] if out.ndim == 0 else out


def full_kernel(cc: CubicCoefficients, rd: RayleighData, xi1, xi2, xi3):
    """Kernel ``b = 6 b1 b^1 + 2 b2 b^2 + b3 b^3 + 3 b4 b^4``.

    ``cc`` is given in physical units and normalized by ``mu = c_S**2``.
    """
    ccn = cc.normalized(rd.c_S ** 2)
    out = kernel_from_tensor(d_full(ccn), rd, xi1, xi2, xi3)
    return out[()] if out.ndim == 0 else out
