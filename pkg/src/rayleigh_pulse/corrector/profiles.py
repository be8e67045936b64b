"""Leading profile, first corrector, boundary solve and solvability residual.

All profile data live in the mixed representation: physical in ``x1``,
band-limited in ``k``.  Time dependence is carried by Taylor coefficients
(``jets``) at one snapshot time, so ``jets[n]`` is ``(d/dt)^n / n!``.

The corrector is kept in factored form

    u_tau(x2, z) = psi(x2) A(z) + psi'(x2) X(z) + psi(x2)^2 N(z)

where ``A`` holds the slow-derivative response and the boundary amplitudes,
``X`` the response to the ``x2``-derivative of ``psi`` and ``N`` the
response to the quadratic interaction.  ``A``, ``X`` and the homogeneous
part of ``N`` are modal sums ``(c0 + c1 z) exp(lam z) r``; the particular
part of ``N`` is a bilinear form in the traces evaluated on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .. import spectral as sp
from ..kernels.expsum import ExponentialSum
from ..material import ModalData, RayleighData, profile_coefficients
from ..spectral import Grid2
from .modal import ModalBand, quad_coefficients


class SupportError(ValueError):
    """Profile data violating the support rule in ``k``."""


def band_of(grid: Grid2, spec: np.ndarray) -> np.ndarray:
    """Full ``(xi1, k)`` spectrum to mixed band values ``(..., x1, M)``."""
    return sp.to_mixed(grid, spec)[..., sp.band_indices(grid)]


def unband(grid: Grid2, band_vals: np.ndarray) -> np.ndarray:
    """Mixed band values to a full mixed array (zeros off band)."""
    out = np.zeros(band_vals.shape[:-1] + (grid.N_theta,), dtype=complex)
    out[..., sp.band_indices(grid)] = band_vals
    return out


def project_x1(grid: Grid2, mixed: np.ndarray) -> np.ndarray:
    """Keep only the ``x1`` modes retained by the solver's 2/3 rule (x1 on axis -2)."""
    f = np.fft.fft(mixed, axis=-2)
    nx = np.abs(np.fft.fftfreq(grid.N_x1, 1.0 / grid.N_x1).round().astype(int))
    f[..., nx > grid.K_band_x1, :] = 0.0
    return np.fft.ifft(f, axis=-2)


def dx1_mixed(grid: Grid2, mixed: np.ndarray) -> np.ndarray:
    """Spectral ``x1`` derivative of a mixed array (x1 on axis -2)."""
    f = np.fft.fft(mixed, axis=-2)
    xi = grid.xi1.copy()
    if grid.N_x1 % 2 == 0:
        xi[grid.N_x1 // 2] = 0.0
    f *= (1j * xi)[:, None]
    return np.fft.ifft(f, axis=-2)


@dataclass
class SigmaProfiles:
    """Traces of the leading profile.

    Attributes
    ----------
    X : ndarray, shape (n_jets, 2, N_x1, M)
        Family amplitudes: ``sigma_hat_j`` of the decaying channel ``j`` of
        family ``a`` at each band ``k``.
    w_jets : ndarray, shape (n_jets, N_x1, M)
        Mixed band Taylor coefficients of ``w``.
    """

    X: np.ndarray
    w_jets: np.ndarray
    band: ModalBand = field(repr=False)

    def sigma_hat(self, jet: int = 0) -> np.ndarray:
        """The four channel traces, shape (4, N_x1, M), zero off their support."""
        out = np.zeros((4,) + self.X.shape[2:], dtype=complex)
        pos = self.band.k > 0
        neg = self.band.k < 0
        for a in range(2):
            out[a][:, pos] = self.X[jet, a][:, pos]
            out[a + 2][:, neg] = self.X[jet, a][:, neg]
        return out


def sigma_traces(grid: Grid2, w_jets: Sequence[np.ndarray], band: ModalBand) -> SigmaProfiles:
    """Traces ``(sigma_1, sigma_2) = -2 i w (omega_2, -q)`` and their mirror for ``k < 0``.

    ``w_jets`` are full ``(xi1, k)`` spectra of Taylor coefficients of ``w``.
    """
    md = band.md
    W = np.stack([band_of(grid, w) for w in w_jets])
    if np.any(W[..., band.K] != 0) and np.abs(W[..., band.K]).max() > 1e-14 * max(np.abs(W).max(), 1e-300):
        raise SupportError("w has a nonzero k = 0 mode")
    W[..., band.K] = 0.0
    X = np.zeros((W.shape[0], 2) + W.shape[1:], dtype=complex)
    X[:, 0] = -2j * md.omega[1] * W
    X[:, 1] = 2j * md.q * band.sgn * W
    return SigmaProfiles(X=X, w_jets=W, band=band)


@dataclass
class CorrectorProfiles:
    """Factored corrector and boundary diagnostics (see module docstring)."""

    A0: np.ndarray          # (n_jets, 2 fam, 2 comp, N_x1, M) coefficient of exp(lam z)
    A1: np.ndarray          # coefficient of z exp(lam z)
    X0: np.ndarray
    X1: np.ndarray
    N0: np.ndarray          # homogeneous part of the quadratic response
    N1: np.ndarray
    tau_star: np.ndarray    # (n_jets, 2 fam, N_x1, M)
    rhs: np.ndarray         # boundary right side (n_jets, 2, N_x1, M)
    coker_residual: np.ndarray   # (N_x1, M) for jet 0, x1-projected, per-k normalized
    range_residual: float
    fredholm: np.ndarray    # (N_x1, M) Fredholm residual, jet 0
    fredholm_scale: np.ndarray   # |F-term| + |G-term|
    defect: np.ndarray = field(repr=False)   # rhs minus its range part, (2, N_x1, M), jet 0
    fL: np.ndarray = field(repr=False)   # (n_jets, 2 fam, N_x1, M, 2)
    fX: np.ndarray = field(repr=False)

    @property
    def n_jets(self) -> int:
        return self.A0.shape[0]


class ProfileBuilder:
    """Builds and evaluates the leading profile and the corrector.

    Parameters
    ----------
    grid : Grid2
    md : ModalData
    rd : RayleighData
    d6 : ndarray
        Third-derivative tensor of the stored energy (normalized units).
    """

    def __init__(self, grid: Grid2, md: ModalData, rd: RayleighData, d6: np.ndarray):
        self.grid = grid
        self.md = md
        self.rd = rd
        self.d6 = d6
        self.band = ModalBand(grid, md)
        S, T, mu, src, valid = quad_coefficients(self.band, d6, grid.dk)
        self.S, self.T, self.mu, self.src, self.valid = S, T, mu, src, valid
        M = self.band.M
        o = np.arange(M)[:, None]
        self.PN = np.zeros_like(S)
        self.HN = np.zeros_like(S)
        self.SN = np.zeros_like(S)
        for a in range(2):
            for b in range(2):
                P, Hc, Sc = self.band.respond(mu[a, b], S[a, b], o)
                self.PN[a, b], self.HN[a, b], self.SN[a, b] = P, Hc, Sc
        self._rhat_coeffs()

    # ------------------------------------------------------------------ helpers
    def _rhat_coeffs(self):
        """``conj r(k, z) = sum_e cv[e, p] exp(-A_e |k| z)``."""
        v1, v2, a1, a2 = profile_coefficients(self.rd)
        band = self.band
        cv = np.zeros((2, band.M, 2), dtype=complex)
        pos = band.k > 0
        for e, v in enumerate((v1, v2)):
            cv[e] = np.where(pos[:, None], np.conj(v), v)
        cv[:, ~band.nz] = 0.0
        self.cv = cv
        self.cv_rates = np.array([a1, a2])[:, None] * np.abs(band.k)[None, :]

    def products(self, X: np.ndarray, a: int, b: int, n: int) -> np.ndarray:
        """Jet ``n`` of ``X_a(k - k') X_b(k')`` on the cell grid, shape (N_x1, M, M)."""
        out = 0.0
        for i in range(n + 1):
            out = out + X[i, a][:, self.src] * X[n - i, b][:, None, :]
        return out

    def bilinear(self, X: np.ndarray, W: np.ndarray, n: int) -> np.ndarray:
        """``sum_ab sum_m W_ab[o, m, ...] (X_a X_b)_n`` -> (N_x1, M, ...)."""
        out = 0.0
        for a in range(2):
            for b in range(2):
                out = out + self._bilinear_pair(X, a, b, n, W[a, b])
        return out

    def _bilinear_pair(self, X: np.ndarray, a: int, b: int, n: int, Wab: np.ndarray) -> np.ndarray:
        M = self.band.M
        XX = self.products(X, a, b, n)                             # (x, o, m)
        # batched over o: (o, x, m) @ (o, m, q)
        r = np.matmul(XX.transpose(1, 0, 2), Wab.reshape(M, M, -1))
        return r.transpose(1, 0, 2).reshape((X.shape[2], M) + Wab.shape[2:])

    # ------------------------------------------------------------- construction
    def forcing_linear(self, sig: SigmaProfiles):
        """Slow-derivative forcing per family: ``f_L`` (psi slot) and ``f_X`` (psi' slot)."""
        band, md, g = self.band, self.md, self.grid
        X = sig.X
        nj = X.shape[0]
        c, r = md.c, md.r
        Kmat = md.K
        ik = 1j * band.k
        dX = dx1_mixed(g, X)
        nout = nj - 1
        fL = np.zeros((nout, 2) + X.shape[2:] + (2,), dtype=complex)
        fX = np.zeros_like(fL)
        for a in range(2):
            rv = band.rv[a]                                     # (M, 2)
            Krv = rv @ Kmat.T
            D1rv = rv * np.array([2 * r, 2.0])
            D2rv = rv * np.array([2.0, 2 * r])
            lam = band.lam[a]
            for n in range(nout):
                fL[n, a] = ((2 * c * ik * (n + 1) * X[n + 1, a])[..., None] * rv
                            + (ik * dX[n, a])[..., None] * D1rv
                            + (lam * dX[n, a])[..., None] * Krv)
                fX[n, a] = X[n, a][..., None] * (ik[:, None] * Krv + lam[:, None] * D2rv)
        return fL, fX

    def _modal_response(self, f: np.ndarray):
        """Response to ``sum_a f[:, a] exp(lam_a z)`` as (c0, c1) per family."""
        band = self.band
        pidx = np.arange(band.M)
        C0 = np.zeros(f.shape[:1] + (2, 2) + f.shape[2:4], dtype=complex)   # (n, fam, comp, x, M)
        C1 = np.zeros_like(C0)
        for a in range(2):
            P, Hc, Sc = band.respond(band.lam[a], f[:, a], pidx)
            C0[:, a] += np.moveaxis(P, -1, 1)
            for b in range(2):
                C0[:, b] += Hc[..., b][:, None] * np.moveaxis(band.rv[b], -1, 0)[:, None, :]
                C1[:, b] += Sc[..., b][:, None] * np.moveaxis(band.rv[b], -1, 0)[:, None, :]
        return C0, C1

    def quadratic_hom(self, X: np.ndarray, nout: int):
        """Homogeneous/secular coefficients of the quadratic response per family."""
        band = self.band
        N0 = np.zeros((nout, 2, 2, X.shape[2], band.M), dtype=complex)
        N1 = np.zeros_like(N0)
        for n in range(nout):
            H = self.bilinear(X, self.HN, n)        # (x, o, fam)
            Sx = self.bilinear(X, self.SN, n)
            for b in range(2):
                rvT = np.moveaxis(band.rv[b], -1, 0)          # (2, M)
                N0[n, b] = H[..., b][None] * rvT[:, None, :]
                N1[n, b] = Sx[..., b][None] * rvT[:, None, :]
        return N0, N1

    def slow_boundary(self, sig: SigmaProfiles, n: int) -> np.ndarray:
        """``l_s u_sigma`` at ``x2 = z = 0`` (jet ``n``), shape (2, N_x1, M)."""
        r = self.md.r
        U = np.einsum("axm,amc->cxm", sig.X[n], self.band.rv)
        dU = dx1_mixed(self.grid, U)
        return np.stack([dU[1], (r - 2.0) * dU[0]])

    def quad_boundary(self, sig: SigmaProfiles, n: int) -> np.ndarray:
        """``n(u_sigma)`` at ``z = 0`` (jet ``n``), shape (2, N_x1, M)."""
        return np.moveaxis(self.bilinear(sig.X, self.T, n), -1, 0)

    def build(self, sig: SigmaProfiles, G_jets: Optional[np.ndarray] = None) -> CorrectorProfiles:
        """Corrector, boundary amplitudes and solvability diagnostics.

        ``G_jets`` are mixed band Taylor coefficients of the boundary force,
        shape ``(n_jets - 1, 2, N_x1, M)`` or ``None``.
        """
        band, md = self.band, self.md
        X = sig.X
        nout = X.shape[0] - 1
        if nout < 1:
            raise ValueError("need at least two jets of w")
        fL, fX = self.forcing_linear(sig)
        A0, A1 = self._modal_response(fL)
        X0, X1 = self._modal_response(fX)
        N0, N1 = self.quadratic_hom(X, nout)
        nx = X.shape[2]
        if G_jets is None:
            G_jets = np.zeros((nout, 2, nx, band.M), dtype=complex)
        Ck = 1j * band.k
        r = md.r
        rhs = np.zeros((nout, 2, nx, band.M), dtype=complex)
        lam = band.lam                                           # (2, M)
        for n in range(nout):
            NP0 = np.moveaxis(self.bilinear(X, self.PN, n), -1, 0)                      # (2, x, M)
            NPz = np.moveaxis(self.bilinear(X, self.PN * self.mu[..., None], n), -1, 0)
            u0 = (A0[n] + N0[n]).sum(axis=0) + NP0
            uz = (lam[:, None, None, :] * (A0[n] + N0[n]) + A1[n] + N1[n]).sum(axis=0) + NPz
            Cu = np.stack([Ck * u0[1] + uz[0], Ck * (r - 2.0) * u0[0] + r * uz[1]])
            rhs[n] = G_jets[n] - self.slow_boundary(sig, n) - self.quad_boundary(sig, n) - Cu
        rhs[..., ~band.nz] = 0.0
        # rank-one least squares per k
        ts = np.einsum("mij,njxm->nixm", band.Bk_pinv, rhs)
        with np.errstate(divide="ignore", invalid="ignore"):
            ts = np.where(band.nz, ts / np.where(band.nz, Ck, 1.0), 0.0)
        for b in range(2):
            rvT = np.moveaxis(band.rv[b], -1, 0)
            A0[:, b] += ts[:, b][:, None] * rvT[None, :, None, :]
        # diagnostics on jet 0; x1 modes beyond the solver's band carry no solvability content
        rp = project_x1(self.grid, rhs[0])
        cnorm = np.linalg.norm(band.coker, axis=1)
        cnorm = np.where(cnorm > 0, cnorm, 1.0)
        cok = np.einsum("mi,ixm->xm", band.coker, rp) / cnorm
        rn = np.linalg.norm(rp, axis=0).max(axis=0)
        rn = np.maximum(rn, 1e-12 * rn.max()) if rn.max() > 0 else np.ones_like(rn)
        coker_res = np.abs(cok) / rn
        cok = np.einsum("mi,ixm->xm", band.coker, rhs[0]) / cnorm
        back = np.einsum("mij,jxm->ixm", band.Bk, ts[0]) * Ck
        proj = rhs[0] - np.conj(band.coker.T / cnorm)[:, None, :] * cok[None]
        range_res = float(np.abs(back - proj).max() / max(np.abs(rhs[0]).max(), 1e-300))
        fred, scale = self.fredholm(sig, fL[0], G_jets[0])
        return CorrectorProfiles(A0=A0, A1=A1, X0=X0, X1=X1, N0=N0, N1=N1, tau_star=ts,
                                 rhs=rhs, coker_residual=coker_res, range_residual=range_res,
                                 fredholm=fred, fredholm_scale=scale,
                                 defect=np.where(band.nz, rhs[0] - back, 0.0), fL=fL, fX=fX)

    def fredholm(self, sig: SigmaProfiles, fL0: np.ndarray, G0: np.ndarray):
        """``int conj(r) . f_sigma dz - conj(r(k, 0)) . (G - l_s u_sigma - n(u_sigma))``."""
        band = self.band
        cv, rates = self.cv, self.cv_rates
        F = np.zeros(fL0.shape[1:3], dtype=complex)
        for a in range(2):
            for e in range(2):
                den = rates[e] - band.lam[a]
                den = np.where(band.nz, den, 1.0)
                F += np.einsum("mc,xmc->xm", cv[e], fL0[a]) / den
        # quadratic part: cell weight int conj(r) exp(mu z) dz
        Wq = np.zeros(self.S.shape[:-1] + (1,), dtype=complex)
        for e in range(2):
            den = rates[e][None, None, :, None] - self.mu
            den = np.where(self.valid, den, 1.0)
            Wq[..., 0] += np.einsum("oc,abomc->abom", cv[e], self.S) / den
        F += self.bilinear(sig.X, Wq, 0)[..., 0]
        Gb = G0 - self.slow_boundary(sig, 0) - self.quad_boundary(sig, 0)
        Gt = np.einsum("mc,cxm->xm", cv.sum(axis=0), Gb)
        return F - Gt, np.abs(F) + np.abs(Gt)

    # --------------------------------------------------------------- evaluation
    def modal_eval(self, C0: np.ndarray, C1: Optional[np.ndarray], z: float, d: int) -> np.ndarray:
        """``d``-th z-derivative of ``sum_b (C0_b + C1_b z) exp(lam_b z)``."""
        lam = self.band.lam[:, None, None, :]
        e = np.exp(lam * z)
        out = (C0 * lam ** d * e).sum(axis=-4)
        if C1 is not None:
            dl = d * lam ** (d - 1) if d > 0 else 0.0
            out = out + (C1 * (z * lam ** d + dl) * e).sum(axis=-4)
        return out

    def sigma_eval(self, sig: SigmaProfiles, z: float, d: int, n: int) -> np.ndarray:
        """``d_z^d`` of jet ``n`` of ``u_sigma`` profile, shape (2, N_x1, M)."""
        lam = self.band.lam
        e = lam ** d * np.exp(lam * z)                      # (2, M)
        return np.einsum("axm,am,amc->cxm", sig.X[n], e, self.band.rv)

    def quad_particular(self, sig: SigmaProfiles, z, n: int, dmax: int = 2) -> np.ndarray:
        """Particular quadratic response and its z-derivatives.

        Shape ``(dmax+1, 2, N_x1, M)`` for scalar ``z``; with an array of
        depths a leading depth axis is added and the convolution products
        are formed once for the whole batch.
        """
        zs = np.atleast_1d(np.asarray(z, dtype=float))
        out = 0.0
        for a in range(2):
            for b in range(2):
                mu = self.mu[a, b][..., None]
                e = np.exp(mu * zs)                                        # (M, M, Z)
                W = np.stack([self.PN[a, b][..., None, :] * (mu ** d * e)[..., None]
                              for d in range(dmax + 1)], axis=-2)          # (M, M, Z, D, 2)
                out = out + self._bilinear_pair(sig.X, a, b, n, W)        # (x, o, Z, D, 2)
        out = np.moveaxis(out, (2, 3, 4), (0, 1, 2))                       # (Z, D, 2, x, o)
        return out if np.ndim(z) else out[0]

    def tau_slots(self, sig: SigmaProfiles, cp: CorrectorProfiles, z, n: int, dmax: int = 2):
        """Profiles of the three corrector slots (A, X, N) at depth ``z``.

        Returns three arrays of shape (dmax+1, 2, N_x1, M), or with a
        leading depth axis when ``z`` is an array.
        """
        zs = np.atleast_1d(np.asarray(z, dtype=float))
        A = np.stack([[self.modal_eval(cp.A0[n], cp.A1[n], zz, d) for d in range(dmax + 1)]
                      for zz in zs])
        Xs = np.stack([[self.modal_eval(cp.X0[n], cp.X1[n], zz, d) for d in range(dmax + 1)]
                       for zz in zs])
        Nh = np.stack([[self.modal_eval(cp.N0[n], cp.N1[n], zz, d) for d in range(dmax + 1)]
                       for zz in zs])
        N = Nh + self.quad_particular(sig, zs, n, dmax)
        if np.ndim(z):
            return A, Xs, N
        return A[0], Xs[0], N[0]

    def tau_sup_profile(self, sig: SigmaProfiles, cp: CorrectorProfiles, zs) -> np.ndarray:
        """``sup_z max_x1 |u_tau(x2 = 0, z)|`` per band k (pre-cutoff, jet 0)."""
        best = np.zeros(self.band.M)
        for z in zs:
            A, _, N = self.tau_slots(sig, cp, z, 0, dmax=0)
            u = A[0] + N[0]
            best = np.maximum(best, np.linalg.norm(u, axis=0).max(axis=0))
        return best

    # ------------------------------------------------ independent per-k route
    def channel_forcing_expsum(self, sig: SigmaProfiles, cp: CorrectorProfiles,
                               ix: int, p: int) -> ExponentialSum:
        """``f_sigma(k, z)`` at ``x2 = 0`` for one ``(x1, k)`` as a vector exponential sum."""
        band = self.band
        terms_c, terms_r = [], []
        for a in range(2):
            terms_c.append(cp.fL[0, a, ix, p])
            terms_r.append(band.lam[a, p])
        for a in range(2):
            for b in range(2):
                m = np.nonzero(self.valid[p])[0]
                xx = sig.X[0, a, ix, self.src[p, m]] * sig.X[0, b, ix, m]
                terms_c.extend(self.S[a, b, p, m] * xx[:, None])
                terms_r.extend(self.mu[a, b, p, m])
        return ExponentialSum(np.array(terms_c), np.array(terms_r)).simplify()

    def tau_channels_expsum(self, sig: SigmaProfiles, cp: CorrectorProfiles,
                            ix: int, p: int) -> List[ExponentialSum]:
        """``tau_j = tau_j^p + tau_j^h`` for one ``(x1, k)`` by ``ExponentialSum`` algebra."""
        band = self.band
        f = self.channel_forcing_expsum(sig, cp, ix, p)
        out = []
        for j in range(4):
            Fj = f.dot(band.ell_ch[j, p])
            anchor = "zero" if band.anchor0[j, p] else "inf"
            tj = Fj.solve_first_order(band.lam_ch[j, p], anchor)
            if band.anchor0[j, p]:
                tj = tj + ExponentialSum([cp.tau_star[0, j % 2, ix, p]], [band.lam_ch[j, p]])
            out.append(tj.simplify())
        return out
