"""Modal data on the dealiased band and the forced-ODE response map.

For each band wavenumber the two decaying modes are indexed by a family
``a`` (0: shear-type root omega_1, 1: pressure-type root omega_2).  For
``k > 0`` these are channels 1, 2 and for ``k < 0`` channels 3, 4 of the
four-channel frame.
"""

from __future__ import annotations

import numpy as np

from ..material import ModalData
from ..spectral import Grid2


class ModalBand:
    """Band-resolved modal quantities.

    Attributes
    ----------
    n, k : ndarray, shape (M,)
        Integer and physical wavenumbers ``-K..K``.
    nz : ndarray of bool
        ``k != 0``.
    om, lam : ndarray, shape (2, M)
        Root ``omega`` and rate ``i k omega`` of the decaying mode per family.
    rv : ndarray, shape (2, M, 2)
        Mode vectors per family.
    lam_ch, ell_ch : ndarray, shapes (4, M), (4, M, 2)
        Rates and left rows of all four channels.
    anchor0 : ndarray of bool, shape (4, M)
        Channels integrated from ``z = 0`` (the decaying ones).
    """

    def __init__(self, grid: Grid2, md: ModalData):
        self.grid = grid
        self.md = md
        K = grid.K_band
        self.K = K
        self.n = np.arange(-K, K + 1)
        self.k = self.n * grid.dk
        self.M = self.n.size
        self.nz = self.n != 0
        sgn = np.sign(self.k)
        self.sgn = sgn
        pos = self.k > 0
        om = np.zeros((2, self.M), dtype=complex)
        rv = np.zeros((2, self.M, 2), dtype=complex)
        for a in range(2):
            om[a] = np.where(pos, md.omega[a], md.omega[a + 2])
            rv[a] = np.where(pos[:, None], md.r_vec[a], md.r_vec[a + 2])
        om[:, ~self.nz] = 0.0
        rv[:, ~self.nz] = 0.0
        self.om = om
        self.rv = rv
        self.lam = 1j * self.k * om
        self.lam_ch = 1j * self.k[None, :] * md.omega[:, None]
        ell = np.zeros((4, self.M, 2), dtype=complex)
        for p in np.nonzero(self.nz)[0]:
            ell[:, p, :] = md.ell_vec(self.k[p])
        self.ell_ch = ell
        self.r_ch = md.r_vec
        self.anchor0 = np.zeros((4, self.M), dtype=bool)
        self.anchor0[:2] = pos
        self.anchor0[2:] = self.k < 0
        # C(k) R_j / (i k) for the two decaying channels: 2x2 per k
        Bk = np.zeros((self.M, 2, 2), dtype=complex)
        for p in np.nonzero(self.nz)[0]:
            kk = self.k[p]
            R = md.R_vec(kk)
            cols = [0, 1] if kk > 0 else [2, 3]
            Bk[p] = md.C_mat(kk) @ R[:, cols] / (1j * kk)
        self.Bk = Bk
        # rank-one pseudoinverse B^H / tr(B^H B)
        BH = np.conj(np.swapaxes(Bk, -1, -2))
        tr = np.einsum("pij,pij->p", np.conj(Bk), Bk).real
        tr[tr == 0] = 1.0
        self.Bk_pinv = BH / tr[:, None, None]
        # cokernel rows for each sign: coker . Bk = 0
        coker = np.zeros((self.M, 2), dtype=complex)
        for p in np.nonzero(self.nz)[0]:
            u, s, vh = np.linalg.svd(Bk[p])
            coker[p] = np.conj(u[:, -1])
        self.coker = coker
        self.chan = np.array([[0, 1]]).T + np.where(pos, 0, 2)[None, :]   # (2, M)

    def gather_index(self):
        """``src[o, m]`` band index of ``n_o - n_m`` and validity mask."""
        p = np.arange(self.M)
        src = p[:, None] - p[None, :] + self.K
        valid = (src >= 0) & (src < self.M)
        src = np.clip(src, 0, self.M - 1)
        valid &= self.nz[:, None] & self.nz[None, :] & self.nz[src]
        return src, valid

    def respond(self, mu, avec, pidx, rtol: float = 1e-9):
        """Decaying response to the forcing ``avec * exp(mu z)`` at band index ``pidx``.

        Returns ``(P, Hc, Sc)``: the particular vector multiplying
        ``exp(mu z)``, and per family the scalar coefficients of
        ``exp(lam z)`` and ``z exp(lam z)`` along the family's mode vector.
        Shapes ``S + (2,)``, ``S + (2,)``, ``S + (2,)`` with ``S`` the
        broadcast shape of ``mu`` and ``pidx``.
        """
        mu = np.asarray(mu, dtype=complex)
        avec = np.asarray(avec, dtype=complex)
        pidx = np.asarray(pidx)
        S = np.broadcast_shapes(mu.shape, avec.shape[:-1], pidx.shape)
        P = np.zeros(S + (2,), dtype=complex)
        Hc = np.zeros(S + (2,), dtype=complex)
        Sc = np.zeros(S + (2,), dtype=complex)
        for j in range(4):
            lj = self.lam_ch[j][pidx]
            F = np.einsum("...c,...c->...", self.ell_ch[j][pidx], avec)
            z0 = self.anchor0[j][pidx]
            d = mu - lj
            res = z0 & (np.abs(d) <= rtol * np.maximum(np.abs(lj), 1.0))
            safe = np.where(res | (d == 0), 1.0, d)
            q = np.where(res, 0.0, F / safe)
            P = P + q[..., None] * self.r_ch[j]
            fam = j % 2
            Hc[..., fam] -= np.where(z0, q, 0.0)
            Sc[..., fam] += np.where(res, F, 0.0)
        return P, Hc, Sc


def quad_coefficients(band: ModalBand, d6: np.ndarray, dk: float):
    """Bilinear cell data of the interior and boundary quadratic forms.

    For every output ``o``, input ``m`` and family pair ``(a, b)`` returns the
    coefficient ``S`` of ``X_a(k_o - k_m) X_b(k_m) exp(mu z)`` in
    ``-N(u_sigma)`` and ``T`` in ``n(u_sigma)`` (both 2-vectors), together
    with the rate ``mu``.  The convolution measure ``dk / (2 pi)`` is
    included.  Arrays have shape ``(2, 2, M, M, ...)``; invalid cells are 0.
    """
    src, valid = band.gather_index()
    M = band.M
    k1 = band.k[src]                     # (M, M) first factor k - k'
    k2 = band.k[None, :] * np.ones((M, 1))
    S = np.zeros((2, 2, M, M, 2), dtype=complex)
    T = np.zeros((2, 2, M, M, 2), dtype=complex)
    mu = np.zeros((2, 2, M, M), dtype=complex)
    w = dk / (2 * np.pi)
    for a in range(2):
        om1 = band.om[a][src]
        r1 = band.rv[a][src]            # (M, M, 2)
        e1 = np.stack([np.ones_like(om1), om1], axis=-1)
        g1 = 1j * k1[..., None, None] * r1[..., :, None] * e1[..., None, :]   # [gamma, p]
        for b in range(2):
            om2 = band.om[b][None, :] * np.ones((M, 1))
            r2 = band.rv[b][None, :, :] * np.ones((M, 1, 1))
            e2 = np.stack([np.ones_like(om2), om2], axis=-1)
            g2 = (1j * k2)[..., None, None, None] ** 2 * r2[..., :, None, None] \
                * e2[..., None, :, None] * e2[..., None, None, :]               # [beta, j, l]
            h2 = 1j * k2[..., None, None] * r2[..., :, None] * e2[..., None, :]   # [beta, l]
            # -N = + d_{alpha j beta l gamma p} g1[gamma p] g2[beta j l]
            s = np.einsum("ajblgp,...gp,...bjl->...a", d6, g1, g2, optimize=True)
            # n = 1/2 d_{alpha 2 beta l gamma p} v_{beta l} v_{gamma p}
            t = 0.5 * np.einsum("ablgp,...bl,...gp->...a", d6[:, 1], h2, g1, optimize=True)
            S[a, b] = np.where(valid[..., None], w * s, 0.0)
            T[a, b] = np.where(valid[..., None], w * t, 0.0)
            mu[a, b] = np.where(valid, 1j * (k1 * om1 + k2 * om2), 0.0)
    return S, T, mu, src, valid
