"""Smooth cutoffs: the low-frequency multiplier chi and the depth profile psi."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def smoothstep(t, deriv: int = 0):
    """Quintic ``6t^5 - 15t^4 + 10t^3`` clamped to [0, 1], or its derivatives."""
    t = np.asarray(t, dtype=float)
    inside = (t > 0) & (t < 1)
    tc = np.clip(t, 0.0, 1.0)
    if deriv == 0:
        return tc ** 3 * (10 - 15 * tc + 6 * tc * tc)
    if deriv == 1:
        v = 30 * tc ** 2 * (1 - tc) ** 2
    elif deriv == 2:
        v = 60 * tc * (1 - tc) * (1 - 2 * tc)
    elif deriv == 3:
        v = 60 * (1 - 6 * tc + 6 * tc * tc)
    else:
        raise ValueError("deriv must be 0..3")
    return np.where(inside, v, 0.0)


def psi(x2, deriv: int = 0):
    """Depth cutoff: 1 on [0, 1/2], 0 on [1, inf), quintic in between."""
    x2 = np.asarray(x2, dtype=float)
    s = smoothstep((x2 - 0.5) / 0.5, deriv) * (-1.0) * 2.0 ** deriv
    return 1.0 + s if deriv == 0 else s


@dataclass(frozen=True)
class CutoffSpec:
    """Even cutoff ``chi(k / p)`` with ``p = eps**b_exp``."""

    b_exp: float = 0.4

    def __post_init__(self):
        if self.b_exp <= 0:
            raise ValueError("b_exp must be positive")

    @staticmethod
    def chi(s):
        """0 for ``|s| <= 1/2``, 1 for ``|s| >= 1``, C^2 and monotone in between."""
        s = np.abs(np.asarray(s, dtype=float))
        return smoothstep(2.0 * s - 1.0)

    def p(self, eps: float) -> float:
        return float(eps) ** self.b_exp

    def multiplier(self, k, eps: float):
        """``chi(k / p(eps))``."""
        return self.chi(np.asarray(k, dtype=float) / self.p(eps))
