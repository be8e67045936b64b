"""Finite sums of terms ``c z^p exp(mu z)`` with ``p`` in {0, 1}.

Coefficients may be scalars or arrays (e.g. 2-vectors); every term of one
sum shares the same coefficient shape.
"""

from __future__ import annotations

from math import factorial
from typing import Iterable, Sequence

import numpy as np


class ExponentialSum:
    """Sum of ``coeff[n] * z**power[n] * exp(rate[n] * z)``.

    Parameters
    ----------
    coeffs : array_like, shape (n, ...)
    rates : array_like of complex, shape (n,)
    powers : array_like of int, shape (n,)
    """

    __slots__ = ("coeffs", "rates", "powers")

    def __init__(self, coeffs, rates, powers=None):
        rates = np.atleast_1d(np.asarray(rates, dtype=complex))
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim == 0:
            coeffs = coeffs[None]
        if powers is None:
            powers = np.zeros(rates.shape, dtype=int)
        powers = np.atleast_1d(np.asarray(powers, dtype=int))
        if not (coeffs.shape[0] == rates.shape[0] == powers.shape[0]):
            raise ValueError("coeffs, rates and powers must have the same length")
        self.coeffs = coeffs
        self.rates = rates
        self.powers = powers

    @classmethod
    def zero(cls, shape: Sequence[int] = ()) -> "ExponentialSum":
        return cls(np.zeros((0,) + tuple(shape), dtype=complex), np.zeros(0), np.zeros(0, int))

    @property
    def shape(self):
        return self.coeffs.shape[1:]

    def __len__(self) -> int:
        return self.rates.shape[0]

    def __repr__(self) -> str:
        return f"ExponentialSum(n={len(self)}, shape={self.shape})"

    def _bshape(self, ndim):
        return (slice(None),) + (None,) * ndim

    def __call__(self, z) -> np.ndarray:
        """Evaluate at ``z``; result shape ``z.shape + coeff shape``."""
        z = np.asarray(z, dtype=float)
        zz = z[..., None]
        basis = zz ** self.powers * np.exp(self.rates * zz)   # (..., n)
        flat = self.coeffs.reshape(len(self), -1)
        out = basis @ flat
        return out.reshape(z.shape + self.shape)

    def __add__(self, other: "ExponentialSum") -> "ExponentialSum":
        return ExponentialSum(np.concatenate([self.coeffs, other.coeffs]),
                              np.concatenate([self.rates, other.rates]),
                              np.concatenate([self.powers, other.powers]))

    def __neg__(self) -> "ExponentialSum":
        return ExponentialSum(-self.coeffs, self.rates, self.powers)

    def __sub__(self, other: "ExponentialSum") -> "ExponentialSum":
        return self + (-other)

    def scale(self, s) -> "ExponentialSum":
        """Multiply every coefficient by ``s`` (scalar or broadcastable array)."""
        s = np.asarray(s, dtype=complex)
        return ExponentialSum(self.coeffs * s, self.rates, self.powers)

    def dot(self, row) -> "ExponentialSum":
        """Contract a vector-valued sum with ``row`` (no conjugation)."""
        return ExponentialSum(self.coeffs @ np.asarray(row, dtype=complex),
                              self.rates, self.powers)

    def conj(self) -> "ExponentialSum":
        """Pointwise complex conjugate (valid for real ``z``)."""
        return ExponentialSum(np.conj(self.coeffs), np.conj(self.rates), self.powers)

    def __mul__(self, other):
        if not isinstance(other, ExponentialSum):
            return self.scale(other)
        n, m = len(self), len(other)
        a = self.coeffs.reshape((n, 1) + self.shape)
        b = other.coeffs.reshape((1, m) + other.shape)
        coeffs = (a * b).reshape((n * m,) + np.broadcast_shapes(self.shape, other.shape))
        rates = (self.rates[:, None] + other.rates[None, :]).ravel()
        powers = (self.powers[:, None] + other.powers[None, :]).ravel()
        if np.any(powers > 1):
            raise ValueError("product would create a power above 1")
        return ExponentialSum(coeffs, rates, powers)

    __rmul__ = __mul__

    def derivative(self) -> "ExponentialSum":
        """``d/dz`` as an exponential sum."""
        b = self._bshape(len(self.shape))
        main = ExponentialSum(self.coeffs * self.rates[b], self.rates, self.powers)
        sec = self.powers == 1
        extra = ExponentialSum(self.coeffs[sec], self.rates[sec], np.zeros(sec.sum(), int))
        return main + extra

    def integrate(self) -> np.ndarray:
        """``int_0^inf`` of the sum; every rate must have negative real part."""
        if np.any(self.rates.real >= 0.0):
            raise ValueError("half-line integral diverges: rate with Re >= 0")
        fact = np.array([factorial(int(p)) for p in self.powers], dtype=float)
        w = fact / (-self.rates) ** (self.powers + 1)
        return np.tensordot(w, self.coeffs, axes=(0, 0))

    def simplify(self, rtol: float = 1e-12) -> "ExponentialSum":
        """Merge terms with equal (rate, power) up to ``rtol`` and drop zero terms."""
        keep_c, keep_r, keep_p = [], [], []
        used = np.zeros(len(self), dtype=bool)
        for i in range(len(self)):
            if used[i]:
                continue
            scale = max(abs(self.rates[i]), 1.0)
            same = (~used) & (self.powers == self.powers[i]) & \
                (np.abs(self.rates - self.rates[i]) <= rtol * scale)
            used |= same
            keep_c.append(self.coeffs[same].sum(axis=0))
            keep_r.append(self.rates[i])
            keep_p.append(self.powers[i])
        if not keep_c:
            return ExponentialSum.zero(self.shape)
        return ExponentialSum(np.array(keep_c), np.array(keep_r), np.array(keep_p))

    def max_abs_coeff(self) -> float:
        return float(np.abs(self.coeffs).max()) if len(self) else 0.0

    def solve_first_order(self, lam: complex, anchor: str, rtol: float = 1e-9) -> "ExponentialSum":
        """Solution of ``(d/dz - lam) y = self`` selected by ``anchor``.

        ``anchor='zero'`` gives ``y(0) = 0`` (the ``int_0^z`` branch);
        ``anchor='inf'`` gives the solution decaying at infinity (the
        ``int_inf^z`` branch).  A rate within ``rtol`` of ``lam`` produces the
        secular ``z exp(lam z)`` term.
        """
        if anchor not in ("zero", "inf"):
            raise ValueError("anchor must be 'zero' or 'inf'")
        lam = complex(lam)
        b = self._bshape(len(self.shape))
        out = ExponentialSum.zero(self.shape)
        scale = max(abs(lam), 1.0)
        for i in range(len(self)):
            c, mu, p = self.coeffs[i], self.rates[i], self.powers[i]
            d = mu - lam
            if abs(d) <= rtol * scale:
                if p != 0:
                    raise ValueError("resonant forcing with a secular term")
                if anchor == "inf":
                    raise ValueError("resonant forcing has no decaying primitive")
                out = out + ExponentialSum(c[None], [lam], [1])
                continue
            if p == 0:
                part = ExponentialSum(c[None] / d, [mu], [0])
                at0 = c / d
            else:
                part = ExponentialSum(np.stack([c / d, -c / d ** 2]), [mu, mu], [1, 0])
                at0 = -c / d ** 2
            out = out + part
            if anchor == "zero":
                out = out + ExponentialSum(-at0[None], [lam], [0])
            elif mu.real >= 0.0:
                raise ValueError("forcing does not decay on the infinite branch")
        return out
