"""Canonical rational kernels, resonance evaluation and the canonical fit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..material import RayleighData
from .elementary import CubicCoefficients, full_kernel


class DegenerateSamplingError(ValueError):
    """Raised when the sample set cannot determine the canonical fit."""


def canonical_H(index: int, r: float, xi1, xi2, xi3):
    """Canonical kernel ``H_index`` with rate ratio ``r = omega1/omega2``."""
    x1, x2, x3 = (np.asarray(x, dtype=float) for x in (xi1, xi2, xi3))
    a1, a2, a3 = np.abs(x1), np.abs(x2), np.abs(x3)
    s = a1 + a2 + a3
    p = a1 * a2 * a3

    def inv(u, v, w):
        return 1.0 / (u + v + w)

    # mixed-sign numerators
    n1, n2, n3 = a1 * x2 * x3, x1 * a2 * x3, x1 * x2 * a3
    if index == 1:
        out = p / s
    elif index == 2:
        out = p * (inv(r * a1, a2, a3) + inv(a1, r * a2, a3) + inv(a1, a2, r * a3))
    elif index == 3:
        out = p * (inv(r * a1, r * a2, a3) + inv(r * a1, a2, r * a3) + inv(a1, r * a2, r * a3))
    elif index == 4:
        out = (n1 + n2 + n3) / s
    elif index == 5:
        out = n1 * inv(a1, r * a2, r * a3) + n2 * inv(r * a1, a2, r * a3) + n3 * inv(r * a1, r * a2, a3)
    elif index == 6:
        out = (n1 * (inv(a1, r * a2, a3) + inv(a1, a2, r * a3))
               + n2 * (inv(r * a1, a2, a3) + inv(a1, a2, r * a3))
               + n3 * (inv(r * a1, a2, a3) + inv(a1, r * a2, a3)))
    elif index == 7:
        out = n1 * inv(r * a1, a2, a3) + n2 * inv(a1, r * a2, a3) + n3 * inv(a1, a2, r * a3)
    elif index == 8:
        out = (n1 * (inv(r * a1, r * a2, a3) + inv(r * a1, a2, r * a3))
               + n2 * (inv(r * a1, r * a2, a3) + inv(a1, r * a2, r * a3))
               + n3 * (inv(r * a1, a2, r * a3) + inv(a1, r * a2, r * a3)))
    else:
        raise ValueError("index must be in 1..8")
    return out[()] if np.ndim(out) == 0 else out


def resonance_lambda(cc: CubicCoefficients, rd: RayleighData, k, kp):
    """``Lambda(k, k') = b(-(k + k'), k, k')``."""
    k = np.asarray(k, dtype=float)
    kp = np.asarray(kp, dtype=float)
    if np.any(k + kp == 0):
        raise ValueError("resonant-zero cell: k + k' = 0")
    return full_kernel(cc, rd, -(k + kp), k, kp)


@dataclass(frozen=True)
class CanonicalFit:
    """Least-squares representation ``Lambda ~ sum a_i H_i`` on the resonance set."""

    coeffs: np.ndarray
    coeffs_imag: np.ndarray
    residual: float


def fit_canonical(k, kp, lam_values, r: float, min_samples: int = 30) -> CanonicalFit:
    """Fit resonance samples of ``Lambda`` onto ``H1, H2, H3``.

    Parameters
    ----------
    k, kp : array_like
        Sample pairs (``k + k' != 0``).
    lam_values : array_like
        ``Lambda(k, k')`` at the samples.
    r : float
        Rate ratio ``omega1 / omega2``.

    Returns
    -------
    CanonicalFit
        Real coefficients, imaginary parts of the complex normal-equation
        solution, and the relative residual.
    """
    k = np.asarray(k, dtype=float).ravel()
    kp = np.asarray(kp, dtype=float).ravel()
    y = np.asarray(lam_values, dtype=complex).ravel()
    if k.size < min_samples:
        raise DegenerateSamplingError(f"need at least {min_samples} samples, got {k.size}")
    X = np.stack([canonical_H(i, r, -(k + kp), k, kp) for i in (1, 2, 3)], axis=1)
    # row scaling by the sample magnitude keeps every decade equally weighted
    w = 1.0 / np.maximum(np.abs(X).max(axis=1), 1e-300)
    Xw = X * w[:, None]
    if np.linalg.matrix_rank(Xw, tol=1e-10 * np.linalg.norm(Xw)) < 3:
        raise DegenerateSamplingError("design matrix is rank deficient")
    sol, *_ = np.linalg.lstsq(Xw.astype(complex), y * w, rcond=None)
    a = sol.real
    resid = np.linalg.norm(X @ a - y) / np.linalg.norm(y)
    return CanonicalFit(coeffs=a, coeffs_imag=sol.imag, residual=float(resid))
