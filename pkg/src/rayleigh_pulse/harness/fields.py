"""Evaluation of the approximate solution and its derivatives on the grid.

A derivative is keyed by ``(n_t, n_x1, n_x2, n_theta, n_z)``.  Slow
directions are ``(t, x1, x2)``; the matching fast directions are
``(-c_R d_theta, d_theta, d_z)``, so that the scaled derivatives read
``D_a = S_a + F_a / eps`` with ``z = x2 / eps``.
"""

from __future__ import annotations

from math import factorial
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from .. import spectral as sp
from ..corrector.cutoff import CutoffSpec, psi
from ..corrector.profiles import (CorrectorProfiles, ProfileBuilder, SigmaProfiles,
                                  dx1_mixed, unband)

Key = Tuple[int, int, int, int, int]

FIRST: Tuple[Key, ...] = ((1, 0, 0, 0, 0), (0, 1, 0, 0, 0), (0, 0, 1, 0, 0),
                          (0, 0, 0, 1, 0), (0, 0, 0, 0, 1))
SECOND: Tuple[Key, ...] = ((2, 0, 0, 0, 0), (0, 2, 0, 0, 0), (0, 1, 1, 0, 0), (0, 0, 2, 0, 0),
                           (1, 0, 0, 1, 0), (0, 1, 0, 1, 0), (0, 1, 0, 0, 1),
                           (0, 0, 1, 1, 0), (0, 0, 1, 0, 1),
                           (0, 0, 0, 2, 0), (0, 0, 0, 1, 1), (0, 0, 0, 0, 2))
ALL_KEYS: Tuple[Key, ...] = ((0, 0, 0, 0, 0),) + FIRST + SECOND


def _add(key: Key, idx: int) -> Key:
    k = list(key)
    k[idx] += 1
    return tuple(k)


def psi_sq(x2, deriv: int):
    """Derivatives of ``psi(x2)^2``."""
    p0, p1 = psi(x2, 0), psi(x2, 1)
    if deriv == 0:
        return p0 * p0
    if deriv == 1:
        return 2 * p0 * p1
    if deriv == 2:
        return 2 * p1 * p1 + 2 * p0 * psi(x2, 2)
    raise ValueError("deriv must be 0..2")


class DerivSet:
    """Physical-space derivatives of one 2-vector profile at one depth.

    Parameters
    ----------
    data : dict
        ``Key -> ndarray (2, N_x1, N_theta)``.
    c : float
        Phase speed in the fast time derivative ``-c d_theta``.
    """

    def __init__(self, data: Dict[Key, np.ndarray], c: float):
        self.data = data
        self.c = c

    def __getitem__(self, key: Key) -> np.ndarray:
        return self.data[key]

    def combine(self, a: float, other: "DerivSet", b: float) -> "DerivSet":
        """``a * self + b * other``."""
        return DerivSet({k: a * v + b * other.data[k] for k, v in self.data.items()}, self.c)

    def _slow(self, key: Key, a: int) -> Key:
        return _add(key, a)

    def _fast(self, key: Key, a: int) -> Tuple[float, Key]:
        if a == 0:
            return -self.c, _add(key, 3)
        if a == 1:
            return 1.0, _add(key, 3)
        return 1.0, _add(key, 4)

    def first(self, a: int, part: str) -> np.ndarray:
        """``S_a u`` (``part='s'``) or ``F_a u`` (``'f'``)."""
        base = (0, 0, 0, 0, 0)
        if part == "s":
            return self.data[self._slow(base, a)]
        f, key = self._fast(base, a)
        return f * self.data[key]

    def second(self, a: int, b: int, part: str) -> np.ndarray:
        """``S_a S_b``, ``S_a F_b + F_a S_b`` or ``F_a F_b`` applied to ``u``."""
        base = (0, 0, 0, 0, 0)
        if part == "ss":
            return self.data[self._slow(self._slow(base, a), b)]
        if part == "ff":
            fa, ka = self._fast(base, a)
            fb, kab = self._fast(ka, b)
            return fa * fb * self.data[kab]
        if part == "sf":
            fb, kb = self._fast(base, b)
            fa, ka = self._fast(base, a)
            return fb * self.data[self._slow(kb, a)] + fa * self.data[self._slow(ka, b)]
        raise ValueError(f"unknown part {part!r}")

    def grad(self, eps: Optional[float] = None, part: str = "d") -> np.ndarray:
        """Spatial gradient ``v[alpha, j]``: scaled (``'d'``), slow or fast."""
        cols = []
        for a in (1, 2):
            if part == "d":
                cols.append(self.first(a, "s") + self.first(a, "f") / eps)
            else:
                cols.append(self.first(a, part))
        return np.stack(cols, axis=1)

    def hess(self, eps: Optional[float] = None, part: str = "d") -> np.ndarray:
        """Spatial second derivatives ``H[beta, j, l]``."""
        out = np.empty((2, 2, 2) + self.data[(0, 0, 0, 0, 0)].shape[1:])
        for j, a in enumerate((1, 2)):
            for l, b in enumerate((1, 2)):
                out[:, j, l] = self.d2(a, b, eps, part)
        return out

    def d2(self, a: int, b: int, eps: Optional[float] = None, part: str = "d") -> np.ndarray:
        if part == "d":
            return (self.second(a, b, "ss") + self.second(a, b, "sf") / eps
                    + self.second(a, b, "ff") / eps ** 2)
        return self.second(a, b, part)


class ProfileFields:
    """Evaluator of ``u_sigma``, the cut-off ``u_tau`` and ``u_a`` at fixed ``eps``.

    Parameters
    ----------
    pb : ProfileBuilder
    sig : SigmaProfiles
    cp : CorrectorProfiles
    eps : float
    cutoff : CutoffSpec or None
        ``None`` keeps every band mode of the corrector.
    slot_cache : dict, optional
        Depth-keyed corrector slots; they do not depend on ``eps`` and may
        be shared between evaluators.
    """

    def __init__(self, pb: ProfileBuilder, sig: SigmaProfiles, cp: CorrectorProfiles,
                 eps: float, cutoff: Optional[CutoffSpec] = None,
                 slot_cache: Optional[dict] = None):
        if not 0 < eps <= 1:
            raise ValueError("eps must lie in (0, 1]")
        self.pb, self.sig, self.cp, self.eps = pb, sig, cp, float(eps)
        self.grid = pb.grid
        band = pb.band
        self.cutoff = cutoff
        self.chi = self.chi_of(band.k)
        self.ik = 1j * band.k
        self._slots: Dict[Tuple[float, int], tuple] = {} if slot_cache is None else slot_cache
        if sig.X.shape[0] < 3 or cp.n_jets < 3:
            raise ValueError("need jets up to second order in time")

    def chi_of(self, k) -> np.ndarray:
        """Cutoff multiplier on arbitrary ``k`` (zero at ``k = 0``)."""
        k = np.asarray(k, dtype=float)
        if self.cutoff is not None:
            return self.cutoff.multiplier(k, self.eps)
        return np.where(k != 0, 1.0, 0.0)

    # ----------------------------------------------------------- band values
    def _finish(self, arr: np.ndarray, key: Key) -> np.ndarray:
        nt, n1, n2, nth, nz = key
        arr = arr * factorial(nt)
        for _ in range(n1):
            arr = dx1_mixed(self.grid, arr)
        if nth:
            arr = arr * self.ik ** nth
        return arr

    def sigma_band(self, z: float, key: Key) -> np.ndarray:
        nt, n1, n2, nth, nz = key
        base = self.pb.sigma_eval(self.sig, z, nz, nt)
        return self._finish(base * psi(self.eps * z, n2), key)

    def _tau_slots(self, z: float, jet: int):
        k = (float(z), jet)
        if k not in self._slots:
            self._slots[k] = self.pb.tau_slots(self.sig, self.cp, z, jet, dmax=2)
        return self._slots[k]

    def preload(self, zs: Sequence[float], jets: Sequence[int] = (0, 1, 2)):
        """Evaluate the corrector slots for a batch of depths at once."""
        zs = np.asarray(zs, dtype=float)
        for jet in jets:
            A, Xs, N = self.pb.tau_slots(self.sig, self.cp, zs, jet, dmax=2)
            for i, z in enumerate(zs):
                self._slots[(float(z), jet)] = (A[i], Xs[i], N[i])

    def tau_band(self, z: float, key: Key) -> np.ndarray:
        nt, n1, n2, nth, nz = key
        A, Xs, N = self._tau_slots(z, nt)
        x2 = self.eps * z
        base = psi(x2, n2) * A[nz] + psi(x2, n2 + 1) * Xs[nz] + psi_sq(x2, n2) * N[nz]
        return self._finish(base * self.chi, key)

    # ------------------------------------------------------------- physical
    def to_physical(self, band_vals: np.ndarray) -> np.ndarray:
        return sp.theta_inverse(self.grid, unband(self.grid, band_vals), real=True)

    def derivs(self, which: str, z: float, keys: Iterable[Key] = ALL_KEYS) -> DerivSet:
        """``which`` is ``'sigma'`` or ``'tau'``."""
        f = self.sigma_band if which == "sigma" else self.tau_band
        data = {k: self.to_physical(f(z, k)) for k in keys}
        return DerivSet(data, self.pb.rd.c_R)

    def u_a(self, z: float, keys: Iterable[Key] = ALL_KEYS):
        """``(u_sigma, u_tau, u_a)`` derivative sets with ``u_a = eps^2 u_sigma + eps^3 u_tau``."""
        s = self.derivs("sigma", z, keys)
        t = self.derivs("tau", z, keys)
        e = self.eps
        return s, t, s.combine(e * e, t, e ** 3)

    def clear(self):
        self._slots.clear()
