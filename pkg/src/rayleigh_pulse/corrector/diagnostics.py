"""Corrector diagnostics: small-k scaling, solvability residual, cutoff."""

from __future__ import annotations

from typing import Optional, Sequence, Tuple

import numpy as np

from .. import spectral as sp
from ..spectral import Grid2
from .cutoff import CutoffSpec
from .profiles import CorrectorProfiles, ProfileBuilder, SigmaProfiles, project_x1


def depth_samples(pb: ProfileBuilder, n: int = 400, span: float = 12.0) -> np.ndarray:
    """Depths reaching ``span`` decay lengths of the slowest band mode."""
    kmin = pb.grid.dk
    rate = min(abs(np.real(1j * w)) for w in pb.md.omega[:2]) or 1.0
    zmax = span / (kmin * rate)
    return np.concatenate([[0.0], np.geomspace(1e-3, zmax, n - 1)])


def tau_sup(pb: ProfileBuilder, sig: SigmaProfiles, cp: CorrectorProfiles,
            zs: Optional[Sequence[float]] = None, chunk: int = 32) -> np.ndarray:
    """``sup_z max_x1 |u_tau(x2 = 0, z)|`` per band ``k`` (before the cutoff)."""
    zs = depth_samples(pb) if zs is None else np.asarray(zs, dtype=float)
    best = np.zeros(pb.band.M)
    for i in range(0, zs.size, chunk):
        A, _, N = pb.tau_slots(sig, cp, zs[i:i + chunk], 0, dmax=0)
        u = A[:, 0] + N[:, 0]                                  # (Z, 2, x, M)
        best = np.maximum(best, np.linalg.norm(u, axis=1).max(axis=(0, 1)))
    return best


def tau_scaling_fit(k: np.ndarray, sup: np.ndarray,
                    window: Tuple[float, float] = (0.0, 0.2)) -> Tuple[float, float]:
    """Exponent and ``r^2`` of ``sup |tau(k)|`` against ``k`` on ``lo < k <= hi``."""
    k = np.asarray(k, dtype=float)
    sel = (k > window[0]) & (k <= window[1]) & (np.asarray(sup) > 0)
    if sel.sum() < 4:
        raise ValueError(f"k window {window} holds {sel.sum()} usable modes; need 4")
    return sp.power_fit(k[sel], np.asarray(sup)[sel])


def fredholm_normalized(grid: Grid2, cp: CorrectorProfiles, projected: bool = True) -> float:
    """``max |R| / max (|F-term| + |G-term|)`` over ``(x1, k)``."""
    R = project_x1(grid, cp.fredholm) if projected else cp.fredholm
    scale = np.abs(cp.fredholm_scale).max()
    return float(np.abs(R).max() / scale) if scale > 0 else 0.0


def apply_cutoff(pb: ProfileBuilder, values: np.ndarray, spec: CutoffSpec, eps: float) -> np.ndarray:
    """Multiply band values (last axis) by ``chi(k / p)``."""
    return values * spec.multiplier(pb.band.k, eps)


def cokernel_fredholm_ratio(pb: ProfileBuilder, cp: CorrectorProfiles,
                            rel: float = 1e-3) -> Tuple[float, float]:
    """Ratio ``|coker . rhs| / |R|`` and its relative spread over cells with sizable ``R``.

    The two are proportional with one material constant, so a spread at
    roundoff level means the cokernel part of the boundary data is exactly
    the solvability residual.  Returns ``(nan, nan)`` when ``R`` vanishes.
    """
    cok = np.abs(np.einsum("mi,ixm->xm", pb.band.coker, cp.rhs[0]))
    R = np.abs(cp.fredholm)
    top = R.max()
    if not top > 0:
        return float("nan"), float("nan")
    sel = R > rel * top
    ratio = cok[sel] / R[sel]
    c = float(np.median(ratio))
    return c, float(np.abs(ratio - c).max() / c)
