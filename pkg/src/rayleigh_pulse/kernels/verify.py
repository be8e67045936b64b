"""Sampled checks of the kernel: growth bound, canonical reductions and fit."""

from __future__ import annotations

from typing import Dict

import numpy as np

from ..material import RayleighData
from .canonical import CanonicalFit, canonical_H, fit_canonical, resonance_lambda
from .elementary import CubicCoefficients, full_kernel


def log_uniform_triples(rng: np.random.Generator, n: int, decades: float = 4.0,
                        centre: float = 1.0) -> np.ndarray:
    """``(n, 3)`` random-sign triples with magnitudes log-uniform over ``decades``."""
    mag = centre * 10.0 ** rng.uniform(-decades / 2, decades / 2, size=(n, 3))
    sgn = rng.choice([-1.0, 1.0], size=(n, 3))
    return mag * sgn


def bound_ratio(cc: CubicCoefficients, rd: RayleighData, xi: np.ndarray) -> np.ndarray:
    """``|b| / (|xi1 xi2 xi3|^(1/2) min|xi_i|^(1/2))`` per row of ``xi``."""
    b = full_kernel(cc, rd, xi[:, 0], xi[:, 1], xi[:, 2])
    a = np.abs(xi)
    return np.abs(b) / (np.sqrt(a.prod(axis=1)) * np.sqrt(a.min(axis=1)))


def bound_constant(cc: CubicCoefficients, rd: RayleighData, n: int = 10_000,
                   decades: float = 4.0, seed: int = 0) -> float:
    """Smallest constant in the growth bound seen over ``n`` samples."""
    rng = np.random.default_rng(seed)
    return float(bound_ratio(cc, rd, log_uniform_triples(rng, n, decades)).max())


def resonance_samples(rng: np.random.Generator, n: int, decades: float = 4.0):
    """Pairs ``(k, k')`` with ``k + k' != 0``."""
    kk = log_uniform_triples(rng, n, decades)[:, :2]
    bad = np.isclose(kk[:, 0] + kk[:, 1], 0.0)
    kk[bad, 1] *= 1.5
    return kk[:, 0], kk[:, 1]


def reduction_residuals(r: float, n: int = 1000, seed: int = 0) -> Dict[str, float]:
    """Max relative size of ``H4 + H1`` and ``H3 + H5 - 4 H1 / (1 + r)`` on the resonance set."""
    rng = np.random.default_rng(seed)
    k, kp = resonance_samples(rng, n)
    x = (-(k + kp), k, kp)
    H = {i: canonical_H(i, r, *x) for i in (1, 3, 4, 5)}
    scale = np.abs(H[1]) + np.abs(H[3]) + np.abs(H[5])
    return {
        "H4+H1": float(np.max(np.abs(H[4] + H[1]) / scale)),
        "H3+H5-4H1/(1+r)": float(np.max(np.abs(H[3] + H[5] - 4.0 / (1.0 + r) * H[1]) / scale)),
    }


def canonical_fit_check(cc: CubicCoefficients, rd: RayleighData, n: int = 200,
                        seed: int = 0) -> CanonicalFit:
    """Fit resonance samples of ``Lambda`` onto ``H1, H2, H3``."""
    rng = np.random.default_rng(seed)
    k, kp = resonance_samples(rng, n, decades=2.0)
    return fit_canonical(k, kp, resonance_lambda(cc, rd, k, kp), rd.ratio)
