"""Scalar and modal constants of the isotropic Rayleigh problem.

Speeds are normalized so that the shear speed is one.  In those units the
Lamé pair becomes ``(r - 2, 1)`` with ``r = c_P**2 / c_S**2`` and the only
free material parameter is ``r``.  Physical values are recovered by
multiplying speeds with ``c_S``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

ArrayLike = Union[float, np.ndarray]


class ConstitutiveError(ValueError):
    """Raised for Lamé parameters outside ``mu > 0, lambda + mu > 0``."""


class InternalConsistencyError(RuntimeError):
    """Raised when two independent evaluations of a constant disagree."""


@dataclass(frozen=True)
class MaterialConstants:
    """Lamé constants and bulk wave speeds.

    Attributes
    ----------
    lam, mu : float
        Lamé parameters.
    c_S, c_P : float
        Shear and pressure speeds, ``sqrt(mu)`` and ``sqrt(lam + 2 mu)``.
    r : float
        Ratio ``c_P**2 / c_S**2`` (> 1).
    """

    lam: float
    mu: float
    c_S: float
    c_P: float
    r: float

    @property
    def lam_normalized(self) -> float:
        """First Lamé parameter in units where ``mu = 1``."""
        return self.r - 2.0


def wave_speeds(lam: float, mu: float) -> MaterialConstants:
    """Build :class:`MaterialConstants` from Lamé parameters."""
    lam = float(lam)
    mu = float(mu)
    if not np.isfinite(lam) or not np.isfinite(mu):
        raise ConstitutiveError("Lamé parameters must be finite")
    if mu <= 0.0:
        raise ConstitutiveError(f"mu > 0 violated (mu={mu})")
    if lam + mu <= 0.0:
        raise ConstitutiveError(f"lambda + mu > 0 violated (lambda + mu={lam + mu})")
    c_S = np.sqrt(mu)
    c_P = np.sqrt(lam + 2.0 * mu)
    return MaterialConstants(lam=lam, mu=mu, c_S=float(c_S), c_P=float(c_P),
                             r=(lam + 2.0 * mu) / mu)


@dataclass(frozen=True)
class RayleighData:
    """Rayleigh-wave constants in units with ``c_S = 1``.

    Attributes
    ----------
    c_R : float
        Rayleigh speed (normalized).
    omega1, omega2 : float
        Real decay rates per unit wavenumber, ``sqrt(1 - c_R**2)`` and
        ``sqrt(1 - c_R**2 / r)``.
    q : float
        ``sqrt(omega1 * omega2)``.
    c0 : float
        Normalization constant of the amplitude equation.
    tau : float
        Frequency at unit wavenumber, ``-c_R``.
    r : float
        Speed-squared ratio of the underlying material.
    c_S : float
        Physical shear speed, used to convert back to physical units.
    """

    c_R: float
    omega1: float
    omega2: float
    q: float
    c0: float
    tau: float
    r: float
    c_S: float = 1.0

    @property
    def c_R_physical(self) -> float:
        return self.c_R * self.c_S

    @property
    def c0_physical(self) -> float:
        # c0 is linear in tau, hence scales like a speed
        return self.c0 * self.c_S

    @property
    def ratio(self) -> float:
        """Rate ratio ``omega1 / omega2`` in (0, 1)."""
        return self.omega1 / self.omega2


def dispersion_residual(c: ArrayLike, r: float) -> ArrayLike:
    """Residual ``(c^2/2 - 1)^4 - (1 - c^2)(1 - c^2/r)`` (``c_S = 1``)."""
    c2 = np.asarray(c) ** 2
    return (0.5 * c2 - 1.0) ** 4 - (1.0 - c2) * (1.0 - c2 / r)


def _ray_residual(c: float, r: float) -> float:
    # 2 - c^2 - 2 q(c); negative just above 0, positive at c = 1
    w1w2 = np.sqrt((1.0 - c * c) * (1.0 - c * c / r))
    return 2.0 - c * c - 2.0 * np.sqrt(w1w2)


def _bisect_rayleigh(r: float) -> float:
    hi = 1.0
    lo = 0.5
    # shrink the lower end until the residual is negative; c = 0 is a
    # spurious root of the unreduced residual
    for _ in range(60):
        if _ray_residual(lo, r) < 0.0:
            break
        lo *= 0.5
    else:
        raise InternalConsistencyError("could not bracket the Rayleigh root")
    if not _ray_residual(hi, r) > 0.0:
        raise InternalConsistencyError("could not bracket the Rayleigh root")
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _ray_residual(mid, r) < 0.0:
            lo = mid
        else:
            hi = mid
    # both ends are one ulp apart; keep the one with smaller residual
    return lo if abs(_ray_residual(lo, r)) <= abs(_ray_residual(hi, r)) else hi


def c0_closed_form(tau: float, omega1: float, omega2: float) -> float:
    """Closed form of ``c0`` at unit wavenumber."""
    return -4.0 * tau * (omega2 - omega1) * ((omega2 / omega1 - 1.0) + 2.0 * omega1 * omega2)


def profile_coefficients(rd: RayleighData):
    """Return ``(v1, v2, a1, a2)`` with ``V(z) = v1 e^{-a1 z} + v2 e^{-a2 z}``."""
    w1, w2 = rd.omega1, rd.omega2
    v1 = np.array([-2j * w1 * w2, 2.0 * w2])
    v2 = (w1 * w1 + 1.0) * np.array([1j, -w2])
    return v1, v2, w1, w2


def c0_integral_form(tau: float, omega1: float, omega2: float) -> float:
    """``-2 tau * int_0^inf |V(z)|^2 dz`` by exact exponential integrals."""
    v1 = np.array([-2j * omega1 * omega2, 2.0 * omega2])
    v2 = (omega1 ** 2 + 1.0) * np.array([1j, -omega2])
    vs = (v1, v2)
    rates = (omega1, omega2)
    total = 0.0 + 0.0j
    for va, a in zip(vs, rates):
        for vb, b in zip(vs, rates):
            total += np.vdot(va, vb) / (a + b)
    return float(-2.0 * tau * total.real)


def compute_c0(rd: RayleighData, rtol: float = 1e-10) -> float:
    """Evaluate ``c0`` by its closed form and check it against the integral form.

    Raises
    ------
    InternalConsistencyError
        If the two evaluations differ by more than ``rtol`` (relative).
    """
    closed = c0_closed_form(rd.tau, rd.omega1, rd.omega2)
    integral = c0_integral_form(rd.tau, rd.omega1, rd.omega2)
    if abs(closed - integral) > rtol * max(abs(closed), 1e-300):
        raise InternalConsistencyError(
            f"c0 mismatch: closed form {closed!r} vs integral {integral!r}")
    return closed


def solve_rayleigh(mc: MaterialConstants) -> RayleighData:
    """Rayleigh speed, decay rates and ``c0`` for a material."""
    r = mc.r
    c = _bisect_rayleigh(r)
    res = dispersion_residual(c, r)
    if abs(res) > 1e-12:
        raise InternalConsistencyError(f"dispersion residual {res:.3e} too large")
    w1 = np.sqrt(1.0 - c * c)
    w2 = np.sqrt(1.0 - c * c / r)
    q = np.sqrt(w1 * w2)
    tau = -c
    c0 = c0_closed_form(tau, w1, w2)
    rd = RayleighData(c_R=float(c), omega1=float(w1), omega2=float(w2), q=float(q),
                      c0=float(c0), tau=float(tau), r=float(r), c_S=mc.c_S)
    compute_c0(rd)
    return rd


def profile_V(rd: RayleighData, z: ArrayLike) -> np.ndarray:
    """Surface-wave profile ``V(z)`` at unit wavenumber, shape ``z.shape + (2,)``."""
    z = np.asarray(z, dtype=float)
    v1, v2, a1, a2 = profile_coefficients(rd)
    e1 = np.exp(-a1 * z)[..., None]
    e2 = np.exp(-a2 * z)[..., None]
    return e1 * v1 + e2 * v2


def profile_rhat(rd: RayleighData, k: ArrayLike, z: ArrayLike) -> np.ndarray:
    """Fourier profile ``r(k, z) = V(k z)`` for ``k > 0`` and its conjugate mirror."""
    k = np.asarray(k, dtype=float)
    if np.any(k == 0.0):
        raise ValueError("profile_rhat is undefined at k = 0")
    z = np.asarray(z, dtype=float)
    v = profile_V(rd, np.abs(k) * z)
    return np.where((k < 0)[..., None], np.conj(v), v)


def group_velocity(rd: RayleighData, eta: float) -> float:
    """Group velocity ``c_R sign(eta)`` of the boundary dispersion ``c_R |eta|``."""
    if eta == 0:
        raise ValueError("group velocity undefined at eta = 0")
    return rd.c_R * float(np.sign(eta))


@dataclass(frozen=True)
class ModalData:
    """Characteristic roots, vectors and boundary matrices of the fast problem.

    The roots follow the imaginary convention: ``omega[0] = i omega1``,
    ``omega[1] = i omega2`` with the real rates of :class:`RayleighData`,
    ``omega[2:] = conj(omega[:2])``.  Mode ``j`` has the form
    ``exp(i k (theta + omega_j z)) r_j`` and decays in ``z`` when
    ``Im(k omega_j) > 0``.
    """

    c: float
    r: float
    q: complex
    omega: np.ndarray
    r_vec: np.ndarray
    B_lop: np.ndarray
    ker_vec: np.ndarray
    coker_vec: np.ndarray
    K: np.ndarray = field(repr=False)

    def R_vec(self, k: float) -> np.ndarray:
        """Columns ``R_j = (r_j, i k omega_j r_j)``, shape (4, 4)."""
        R = np.empty((4, 4), dtype=complex)
        for j in range(4):
            R[:2, j] = self.r_vec[j]
            R[2:, j] = 1j * k * self.omega[j] * self.r_vec[j]
        return R

    def L_vec(self, k: float) -> np.ndarray:
        """Left eigenvectors as rows, shape (4, 4), with ``L_m R_n = delta``."""
        c2, r = self.c * self.c, self.r
        w1, w2 = self.omega[0], self.omega[1]

        def l1(kk, a1):
            return np.array([-1j * kk * (r - c2), -1j * kk * a1, a1, -r]) / (-2j * a1 * c2 * kk)

        def l2(kk, a2):
            return np.array([1j * kk * a2 * r, 1j * kk * (c2 - 1.0), 1.0, r * a2]) / (2j * a2 * c2 * kk)

        L = np.empty((4, 4), dtype=complex)
        L[0] = l1(k, w1)
        L[1] = l2(k, w2)
        L[2] = np.conj(l1(-k, w1))
        L[3] = np.conj(l2(-k, w2))
        return L

    def ell_vec(self, k: float) -> np.ndarray:
        """Rows ``ell_j`` with ``L_j F = ell_j f`` for ``F = (0, -diag(1, 1/r) f)``."""
        L = self.L_vec(k)
        return -L[:, 2:] * np.array([1.0, 1.0 / self.r])

    def G_mat(self, k: float) -> np.ndarray:
        """First-order symbol: ``dz U = G U`` for ``U = (u, dz u)``."""
        c2, r = self.c * self.c, self.r
        G = np.zeros((4, 4), dtype=complex)
        G[0, 2] = G[1, 3] = 1.0
        G[2, 0] = k * k * (r - c2)
        G[3, 1] = k * k * (1.0 - c2) / r
        G[2:, 2:] = -1j * k * np.diag([1.0, 1.0 / r]) @ self.K
        return G

    def C_mat(self, k: float) -> np.ndarray:
        """Boundary symbol acting on ``(u, dz u)``, shape (2, 4)."""
        r = self.r
        C = np.zeros((2, 4), dtype=complex)
        C[:, :2] = 1j * k * np.array([[0.0, 1.0], [r - 2.0, 0.0]])
        C[:, 2:] = np.diag([1.0, r])
        return C


def modal_frame(mc: MaterialConstants, rd: RayleighData, tol: float = 1e-10) -> ModalData:
    """Modal frame with ``beta = (-c_R, 1)`` and ``c_S = 1``."""
    c, r = rd.c_R, mc.r
    w1 = 1j * np.sqrt(1.0 - c * c)
    w2 = 1j * np.sqrt(1.0 - c * c / r)
    q = (2.0 - c * c) / 2.0
    omega = np.array([w1, w2, np.conj(w1), np.conj(w2)])
    r1 = np.array([-w1, 1.0])
    r2 = np.array([1.0, w2])
    r_vec = np.array([r1, r2, np.conj(r1), np.conj(r2)])
    B = np.array([[2.0 - c * c, 2.0 * w2], [2.0 * w1, c * c - 2.0]])
    det = np.linalg.det(B)
    if abs(det) > tol * np.linalg.norm(B):
        raise InternalConsistencyError(f"det B_lop = {det:.3e} at the Rayleigh speed")
    ker = np.array([w2, -q], dtype=complex)
    coker = np.array([q, w2], dtype=complex)
    K = np.array([[0.0, r - 1.0], [r - 1.0, 0.0]])
    return ModalData(c=c, r=r, q=q, omega=omega, r_vec=r_vec, B_lop=B,
                     ker_vec=ker, coker_vec=coker, K=K)
