"""Pseudospectral solver for the nonlocal amplitude equation.

    dt w + c_R dx1 w + H(B(w, w)) = g

``B`` acts in ``theta`` only, through the kernel table on the dealiased band;
``x1`` enters as a parameter.  Transport is integrated exactly by an
integrating factor and the remaining terms by classical RK4 (Lawson form).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from . import spectral as sp
from .kernels.table import KernelTable, band_grid
from .material import RayleighData, profile_rhat
from .spectral import Grid2


class NumericalFailure(RuntimeError):
    """NaN/Inf, blow-up, or a violated stability margin."""


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 0.01
    T: float = 1.0
    m: int = 6
    dealias: bool = True
    blowup_factor: float = 1e3
    gamma: float = 1.0
    stability_margin: float = 1.0

    def __post_init__(self):
        if self.dt <= 0 or self.T <= 0:
            raise ValueError("dt and T must be positive")
        if self.m < 0:
            raise ValueError("m must be nonnegative")
        if self.blowup_factor <= 1:
            raise ValueError("blowup_factor must exceed 1")
        if self.gamma < 1:
            raise ValueError("gamma must be >= 1")


@dataclass
class AmplitudeState:
    t: float
    what: np.ndarray
    grid: Grid2


class BilinearOperator:
    """Gathered kernel table for the band convolution.

    ``B(v, w)(x1, n) = dk * sum_m T[n - m, m] v(x1, n - m) w(x1, m)`` on the
    band ``n, m in [-K, K]``; cells touching ``n = 0`` are zero.
    """

    def __init__(self, grid: Grid2, table: KernelTable):
        K = grid.K_band
        expected = band_grid(grid.dk, K)
        if table.k_grid.shape != expected.shape or not np.allclose(table.k_grid, expected):
            raise ValueError("kernel table grid does not match the state grid")
        self.grid = grid
        self.K = K
        M = 2 * K + 1
        full = np.zeros((M, M), dtype=complex)
        nz = np.r_[0:K, K + 1:M]
        full[np.ix_(nz, nz)] = table.scaled
        p = np.arange(M)
        src = p[:, None] - p[None, :] + K          # band index of n - m
        valid = (src >= 0) & (src < M)
        src_c = np.clip(src, 0, M - 1)
        gathered = np.where(valid, full[src_c, p[None, :]], 0.0)
        gathered[K, :] = 0.0                       # output n = 0 excluded
        self.src = src_c
        self.G = gathered
        self.band = sp.band_indices(grid)
        self.table = table
        self.max_abs = float(np.abs(table.scaled).max()) if table.values.size else 0.0

    def mixed(self, v_mixed: np.ndarray, w_mixed: np.ndarray) -> np.ndarray:
        """Bilinear product in the mixed representation, band values only."""
        vb = v_mixed[..., self.band]
        wb = w_mixed[..., self.band]
        prod = vb[..., self.src] * self.G
        return self.grid.dk * np.einsum("...om,...m->...o", prod, wb)

    def __call__(self, v_hat: np.ndarray, w_hat: Optional[np.ndarray] = None) -> np.ndarray:
        """``B(v, w)`` as a dealiased spectrum (``w = v`` if omitted)."""
        g = self.grid
        vm = sp.to_mixed(g, v_hat)
        wm = vm if w_hat is None else sp.to_mixed(g, w_hat)
        out = np.zeros(vm.shape[:-1] + (g.N_theta,), dtype=complex)
        out[..., self.band] = self.mixed(vm, wm)
        return sp.dealias(g, sp.from_mixed(g, out))

    def rate(self, w_hat: np.ndarray) -> float:
        """Linearized rate ``2 max sum_m |T| |w| dk`` used for the stability margin."""
        wm = np.abs(sp.to_mixed(self.grid, w_hat)[..., self.band])
        return float(2 * self.grid.dk * np.max(np.abs(self.G) @ wm.max(axis=0)))


def bilinear_B(state: AmplitudeState, op: BilinearOperator) -> np.ndarray:
    return op(state.what)


def source_g(grid: Grid2, G_hat: np.ndarray, rd: RayleighData) -> np.ndarray:
    """``g_hat = -(i sgn k / c0) conj(r(k, 0)) . G_hat`` (``k = 0`` cell zero).

    ``G_hat`` has shape ``(2, N_x1, N_theta)``.
    """
    k = grid.k
    out = np.zeros(G_hat.shape[1:], dtype=complex)
    nz = k != 0
    r0 = np.conj(profile_rhat(rd, k[nz], 0.0))           # (nk, 2)
    s = -1j * np.sign(k[nz]) / rd.c0
    out[:, nz] = s * (r0[:, 0] * G_hat[0][:, nz] + r0[:, 1] * G_hat[1][:, nz])
    return out


def nonlinear_part(grid: Grid2, what: np.ndarray, op: BilinearOperator) -> np.ndarray:
    """``-H(B(w, w))``."""
    return -sp.hilbert(grid, op(what))


def rhs(state: AmplitudeState, op: BilinearOperator, rd: RayleighData,
        g_hat: Optional[np.ndarray] = None) -> np.ndarray:
    """Full right-hand side ``-i c_R xi1 w - H(B(w, w)) + g``."""
    grid = state.grid
    out = -1j * rd.c_R * grid.xi1[:, None] * state.what + nonlinear_part(grid, state.what, op)
    if g_hat is not None:
        out = out + g_hat
    return out


def _project(grid: Grid2, what: np.ndarray, dealias: bool) -> np.ndarray:
    what = sp.enforce_hermitian(grid, what)
    if dealias:
        what = sp.dealias(grid, what)
    else:
        what = what.copy()
        what[:, 0] = 0.0
    return what


def step_rk4(state: AmplitudeState, op: BilinearOperator, rd: RayleighData,
             g_of_t: Optional[Callable[[float], np.ndarray]], dt: float,
             dealias: bool = True) -> AmplitudeState:
    """One integrating-factor RK4 step."""
    grid = state.grid
    w, t = state.what, state.t
    E_h = np.exp(-1j * rd.c_R * grid.xi1 * 0.5 * dt)[:, None]
    E = E_h * E_h

    def N(tt, ww):
        out = nonlinear_part(grid, ww, op)
        if g_of_t is not None:
            out = out + g_of_t(tt)
        return out

    a = N(t, w)
    b = N(t + 0.5 * dt, E_h * (w + 0.5 * dt * a))
    c = N(t + 0.5 * dt, E_h * w + 0.5 * dt * b)
    d = N(t + dt, E * w + dt * (E_h * c))
    w_new = E * w + dt / 6.0 * (E * a + 2.0 * E_h * (b + c) + d)
    if not np.all(np.isfinite(w_new)):
        raise NumericalFailure(f"non-finite state at t={t + dt:.4g}")
    return AmplitudeState(t=t + dt, what=_project(grid, w_new, dealias), grid=grid)


def hm_norm(grid: Grid2, what: np.ndarray, m: int, gamma: float = 1.0) -> float:
    return sp.singular_norm(grid, what, r=0.0, m=m, gamma=gamma, spectral=True)


@dataclass
class Trajectory:
    """States on ``[0, T]`` plus the energy log."""

    states: List[AmplitudeState]
    energy: np.ndarray = field(repr=False)   # columns t, L2, Hm, dE
    blowup: bool = False
    message: str = ""

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def final(self) -> AmplitudeState:
        return self.states[-1]


def smooth_envelope(t, ramp: float = 1.0):
    """C-infinity switch: 0 for ``t <= 0``, 1 for ``t >= ramp``."""
    t = np.asarray(t, dtype=float) / ramp

    def f(s):
        s = np.asarray(s, dtype=float)
        return np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)

    a, b = f(t), f(1.0 - t)
    return a / (a + b)


def solve(config: SolverConfig, w0_hat: np.ndarray, grid: Grid2, op: BilinearOperator,
          rd: RayleighData, g_hat0: Optional[np.ndarray] = None,
          envelope: Optional[Callable[[float], float]] = None,
          keep_every: int = 1) -> Trajectory:
    """Integrate from ``t = 0`` to ``config.T``.

    The forcing is ``envelope(t) * g_hat0``.  Blow-up (norm beyond
    ``blowup_factor`` times the initial scale) truncates the trajectory.
    """
    nsteps = int(round(config.T / config.dt))
    if nsteps < 1:
        raise ValueError("T must cover at least one step")
    dt = config.T / nsteps
    w = _project(grid, np.asarray(w0_hat, dtype=complex), config.dealias)
    if g_hat0 is not None:
        g_hat0 = _project(grid, g_hat0, config.dealias)
        env = envelope if envelope is not None else (lambda t: 1.0)

        def g_of_t(t):
            return float(env(t)) * g_hat0
        g_scale = hm_norm(grid, g_hat0, config.m, config.gamma) * config.T
    else:
        g_of_t = None
        g_scale = 0.0
    state = AmplitudeState(0.0, w, grid)
    h0 = hm_norm(grid, w, config.m, config.gamma)
    scale = max(h0, g_scale)
    states = [state]
    rows = [(0.0, hm_norm(grid, w, 0), h0, 0.0)]
    blow, msg = False, ""
    for n in range(nsteps):
        if op.max_abs > 0 and scale > 0:
            rate = op.rate(state.what)
            if dt * rate > config.stability_margin:
                raise NumericalFailure(
                    f"stability margin violated at t={state.t:.4g}: dt*rate={dt * rate:.3g}")
        prev_l2 = rows[-1][1]
        state = step_rk4(state, op, rd, g_of_t, dt, config.dealias)
        l2 = hm_norm(grid, state.what, 0)
        hm = hm_norm(grid, state.what, config.m, config.gamma)
        rows.append((state.t, l2, hm, (l2 * l2 - prev_l2 * prev_l2) / dt))
        if (n + 1) % keep_every == 0 or n == nsteps - 1:
            states.append(state)
        if scale > 0 and hm > config.blowup_factor * scale:
            blow, msg = True, f"norm exceeded {config.blowup_factor:g} x initial scale at t={state.t:.4g}"
            if states[-1] is not state:
                states.append(state)
            break
    return Trajectory(states=states, energy=np.array(rows), blowup=blow, message=msg)


def time_jets(what: np.ndarray, grid: Grid2, op: BilinearOperator, rd: RayleighData,
              g_jets: Optional[List[np.ndarray]] = None, order: int = 3) -> List[np.ndarray]:
    """Taylor coefficients ``w_n = (d/dt)^n w / n!`` at one instant, ``n = 0..order``.

    Uses the equation itself: the nonlinear term is a Cauchy product of
    lower coefficients.  ``g_jets`` are Taylor coefficients of the forcing.
    """
    xi = grid.xi1[:, None]
    jets = [what]
    for n in range(order):
        acc = -1j * rd.c_R * xi * jets[n]
        Bn = np.zeros_like(what)
        for i in range(n + 1):
            Bn = Bn + op(jets[i], jets[n - i])
        acc = acc - sp.hilbert(grid, Bn)
        if g_jets is not None and n < len(g_jets):
            acc = acc + g_jets[n]
        jets.append(sp.dealias(grid, acc) / (n + 1))
    return jets


def trilinear_ratios(grid: Grid2, op: BilinearOperator, u_hat, v_hat, w_hat,
                     m0: int = 3):
    """Ratios of the two trilinear bounds for the bilinear operator.

    Returns ``|<u, H B(v, w)>| / (|u|_0 |v|_1 |w|_{m0})`` and
    ``|<u, H B(u, v)>| / (|v|_{m0+1} |u|_0^2)``.
    """
    def inner(a_hat, b_hat):
        # int a b for real fields: (1/4 pi^2) sum a_hat conj(b_hat) dxi dk
        return float(np.real(np.sum(a_hat * np.conj(b_hat))) * grid.dxi * grid.dk / (4 * np.pi ** 2))

    nu = hm_norm(grid, u_hat, 0)
    if nu == 0:
        return 0.0, 0.0
    I1 = inner(u_hat, sp.hilbert(grid, op(v_hat, w_hat)))
    I2 = inner(u_hat, sp.hilbert(grid, op(u_hat, v_hat)))
    r1 = abs(I1) / (nu * hm_norm(grid, v_hat, 1) * hm_norm(grid, w_hat, m0))
    r2 = abs(I2) / (hm_norm(grid, v_hat, m0 + 1) * nu * nu)
    return r1, r2


def apriori_constant(traj: Trajectory) -> float:
    """``max |d/dt |w|^2_{L2}| / |w|^3_{H^m}`` along a trajectory."""
    e = traj.energy
    hm = e[1:, 2]
    ok = hm > 0
    if not ok.any():
        return 0.0
    return float(np.max(np.abs(e[1:, 3][ok]) / hm[ok] ** 3))


def write_energy_csv(traj: Trajectory, path) -> None:
    np.savetxt(path, traj.energy, delimiter=",", header="t,L2,Hm,dE", comments="", fmt="%.12e")
