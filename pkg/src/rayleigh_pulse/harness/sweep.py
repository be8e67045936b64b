"""Profile pipeline and the eps sweep of residual norms.

The amplitude ``w`` is solved once; profiles and the corrector do not
depend on ``eps``, so each sweep point only changes the cutoff, the depth
scaling ``x2 = eps z`` and the norm weights.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .. import amplitude as am
from .. import spectral as sp
from ..corrector.cutoff import CutoffSpec
from ..corrector.profiles import (CorrectorProfiles, ProfileBuilder, SigmaProfiles, band_of,
                                  sigma_traces)
from ..kernels.elementary import CubicCoefficients
from ..kernels.table import KernelTable, band_grid, build_kernel_table
from ..material import (MaterialConstants, ModalData, RayleighData, modal_frame,
                        solve_rayleigh)
from ..spectral import Grid2
from .fields import ProfileFields
from .report import ExponentCheck, FloorCheck, ResidualReport
from .residuals import BOUNDARY_GROUPS, INTERIOR_GROUPS, boundary_residual, interior_residual
from .svk import SVKModel, svk_tensors

log = logging.getLogger(__name__)

R_MENU = (0.0, 0.5, 1.0, 1.5)
M_MENU = (0, 2)


class _Envelope:
    """Smooth switch-on shared by the force models."""

    ramp: float

    def envelope(self, t):
        return am.smooth_envelope(t, self.ramp)

    def envelope_jets(self, t: float, order: int = 3) -> np.ndarray:
        """Taylor coefficients of the envelope at ``t`` (finite differences inside the ramp)."""
        out = np.zeros(order + 1)
        out[0] = float(self.envelope(t))
        if t >= self.ramp or t <= 0:
            return out
        h = 1e-2 * self.ramp
        f = np.array([float(self.envelope(t + j * h)) for j in range(-3, 4)])
        d1 = (-f[0] + 9 * f[1] - 45 * f[2] + 45 * f[4] - 9 * f[5] + f[6]) / (60 * h)
        d2 = (2 * f[0] - 27 * f[1] + 270 * f[2] - 490 * f[3] + 270 * f[4] - 27 * f[5] + 2 * f[6]) / (180 * h * h)
        d3 = (f[0] - 8 * f[1] + 13 * f[2] - 13 * f[4] + 8 * f[5] - f[6]) / (8 * h ** 3)
        out[1:4] = [d1, d2 / 2, d3 / 6][:order]
        return out


@dataclass(frozen=True)
class ForceSpec(_Envelope):
    """Separable packet ``A env(t) exp(-x1^2/sx^2) exp(-theta^2/st^2) cos(theta) e``."""

    amplitude: float = 0.05
    sigma_x1: float = 2.0
    sigma_theta: float = 6.0
    direction: Tuple[float, float] = (0.0, 1.0)
    ramp: float = 1.0

    def spatial(self, grid: Grid2) -> np.ndarray:
        X, T = grid.mesh()
        prof = (self.amplitude * np.exp(-X ** 2 / self.sigma_x1 ** 2)
                * np.exp(-T ** 2 / self.sigma_theta ** 2) * np.cos(T))
        d = np.asarray(self.direction, dtype=float)
        return d[:, None, None] * prof[None]


@dataclass(frozen=True, eq=False)
class ArrayForce(_Envelope):
    """Tabulated spatial force ``(2, N_x1, N_theta)`` times the envelope."""

    values: np.ndarray = field(repr=False, default_factory=lambda: np.zeros((2, 8, 8)))
    ramp: float = 1.0

    def spatial(self, grid: Grid2) -> np.ndarray:
        v = np.asarray(self.values, dtype=float)
        if v.shape != (2,) + grid.shape:
            raise ValueError(f"force array has shape {v.shape}, grid needs {(2,) + grid.shape}")
        return v


@dataclass
class ProfileBundle:
    """Everything the residual harness needs at one snapshot time."""

    grid: Grid2
    mc: MaterialConstants
    rd: RayleighData
    md: ModalData
    model: SVKModel
    table: KernelTable
    pb: ProfileBuilder
    sig: SigmaProfiles
    cp: CorrectorProfiles
    G: np.ndarray                 # physical force at the snapshot, (2, N_x1, N_theta)
    t: float
    trajectory: Optional[am.Trajectory] = field(default=None, repr=False)


def _setup(mc, grid, cc, table):
    rd = solve_rayleigh(mc)
    md = modal_frame(mc, rd)
    cc = cc if cc is not None else CubicCoefficients.svk(mc)
    model = svk_tensors(mc, cc)
    if table is None:
        table = build_kernel_table(cc, rd, band_grid(grid.dk, grid.K_band))
    return rd, md, model, table


def forcing_spectra(grid: Grid2, rd: RayleighData, force) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Physical force, its spectrum and the dealiased amplitude source."""
    G0 = force.spatial(grid) if force is not None else np.zeros((2,) + grid.shape)
    Gh0 = sp.transform(grid, G0)
    return G0, Gh0, sp.dealias(grid, am.source_g(grid, Gh0, rd))


def solve_amplitude(mc: MaterialConstants, grid: Grid2, solver: am.SolverConfig, force=None,
                    cc: Optional[CubicCoefficients] = None, table: Optional[KernelTable] = None,
                    w0_hat: Optional[np.ndarray] = None, keep_every: int = 0) -> am.Trajectory:
    """Integrate the amplitude equation from ``w0_hat`` (zero by default)."""
    rd, _, _, table = _setup(mc, grid, cc, table)
    op = am.BilinearOperator(grid, table)
    _, _, gh0 = forcing_spectra(grid, rd, force)
    w0 = np.zeros(grid.shape, dtype=complex) if w0_hat is None else w0_hat
    nsteps = int(round(solver.T / solver.dt))
    traj = am.solve(solver, w0, grid, op, rd, gh0 if force is not None else None,
                    envelope=force.envelope if force is not None else None,
                    keep_every=keep_every or max(nsteps, 1))
    if traj.blowup:
        raise am.NumericalFailure(traj.message)
    return traj


def bundle_from_state(mc: MaterialConstants, grid: Grid2, what: np.ndarray, t: float, force=None,
                      cc: Optional[CubicCoefficients] = None,
                      table: Optional[KernelTable] = None) -> ProfileBundle:
    """Profiles and corrector built from the amplitude spectrum at time ``t``."""
    rd, md, model, table = _setup(mc, grid, cc, table)
    op = am.BilinearOperator(grid, table)
    G0, Gh0, gh0 = forcing_spectra(grid, rd, force)
    ej = force.envelope_jets(t, 3) if force is not None else np.zeros(4)
    jets = am.time_jets(what, grid, op, rd, [ej[n] * gh0 for n in range(3)], order=3)
    pb = ProfileBuilder(grid, md, rd, model.d)
    sig = sigma_traces(grid, jets, pb.band)
    Gb = band_of(grid, Gh0)
    cp = pb.build(sig, np.stack([ej[n] * Gb for n in range(3)]))
    return ProfileBundle(grid=grid, mc=mc, rd=rd, md=md, model=model, table=table, pb=pb,
                         sig=sig, cp=cp, G=ej[0] * G0, t=t)


def build_bundle(mc: MaterialConstants, grid: Grid2, solver: am.SolverConfig,
                 force=None, cc: Optional[CubicCoefficients] = None,
                 table: Optional[KernelTable] = None, w0_hat: Optional[np.ndarray] = None,
                 keep_every: int = 0) -> ProfileBundle:
    """Solve the amplitude equation on ``[0, T]`` and build profiles at ``T``."""
    if table is None:
        table = _setup(mc, grid, cc, None)[3]
    traj = solve_amplitude(mc, grid, solver, force, cc, table, w0_hat, keep_every)
    b = bundle_from_state(mc, grid, traj.final.what, traj.final.t, force, cc, table)
    b.trajectory = traj
    return b


def z_panels(eps: float, order: int = 8):
    """Dyadic panels ``[0, 1/2], [1/2, 1], [1, 2], ...`` up to ``1/eps`` with Gauss nodes.

    Panels are shared between dyadic ``eps`` values, so depth data can be
    reused across a sweep.  Returns a list of ``(z, w)`` pairs.
    """
    zmax = 1.0 / eps
    edges = [0.0, 0.5]
    while edges[-1] < zmax:
        edges.append(min(2 * edges[-1], zmax))
    x, w = np.polynomial.legendre.leggauss(order)
    return [(0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w)
            for a, b in zip(edges[:-1], edges[1:])]


def z_nodes(eps: float, order: int = 8) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes on ``[0, 1/eps]``."""
    pan = z_panels(eps, order)
    return np.concatenate([p[0] for p in pan]), np.concatenate([p[1] for p in pan])


def predicted_checks(b_exp: float, tol: float = 0.15) -> Tuple[list, list]:
    """Exponent predictions from the forcing corollaries at cutoff exponent ``b``."""
    b = b_exp
    ex = [
        ExponentCheck("boundary.cutoff.r1.m0", 1 + b, tol),
        ExponentCheck("boundary.h_a.r0.m0", 2.0, tol),
        ExponentCheck("boundary.h_a.r0.5.m0", min(2.5 - 1.5 * b, 1.5 + 0.5 * b), tol),
        ExponentCheck("boundary.h_a.r1.m0", min(2 - b, 2.0, 1 + b), tol),
        ExponentCheck("boundary.h_a.r1.5.m0", min(1.5 - 0.5 * b, 1.5, 0.5 + 1.5 * b, 2.0), tol),
        ExponentCheck("interior.F_a.dx1_L2.r0.5.m0", min(0.5, 2 * b - 0.5), tol),
        ExponentCheck("interior.F_a.L2.r0.5.m0", 1 + min(3 * b - 0.5, 0.5 * b, 0.5), tol),
        ExponentCheck("tau.dx1.sup.r0.m0", -2 * b, tol),
    ]
    fl = [FloorCheck("interior.L_ff_sigma.max"), FloorCheck("boundary.ell_f_sigma.max"),
          FloorCheck("interior.identity.max"), FloorCheck("boundary.identity.max")]
    return ex, fl


def _sq_norm(grid: Grid2, spec: np.ndarray, weight: np.ndarray) -> float:
    return float(np.sum(np.abs(spec * weight) ** 2) * grid.dxi * grid.dk / (4 * np.pi ** 2))


class _Accumulator:
    """Norm accumulation at one ``eps``."""

    def __init__(self, bundle: ProfileBundle, eps: float, b_exp: float, gamma: float,
                 r_menu, m_menu, slot_cache: dict):
        g = bundle.grid
        self.bundle, self.eps, self.b_exp = bundle, eps, b_exp
        self.fields = ProfileFields(bundle.pb, bundle.sig, bundle.cp, eps, CutoffSpec(b_exp),
                                    slot_cache=slot_cache)
        beta = (bundle.rd.c_R, 1.0)
        self.W = {(r, m): sp.singular_weight(g, r, m, gamma, eps, beta)
                  for r in r_menu for m in m_menu}
        self.dx1 = np.abs(g.xi1[:, None] + g.k[None, :] / eps)
        self.l2 = defaultdict(float)
        self.sup = defaultdict(float)
        self.mx = defaultdict(float)
        self.error: Optional[str] = None

    def node(self, z: float, wz: float):
        g, model, eps = self.bundle.grid, self.bundle.model, self.eps
        R = interior_residual(self.fields, model, z)
        for name in INTERIOR_GROUPS + ("truncation", "F_a", "total"):
            spec = sp.transform(g, R[name])
            for (r, m), wt in self.W.items():
                n2 = _sq_norm(g, spec, wt)
                self.l2[f"interior.{name}.L2.r{r:g}.m{m}"] += eps * wz * n2
                skey = f"interior.{name}.sup.r{r:g}.m{m}"
                self.sup[skey] = max(self.sup[skey], np.sqrt(n2))
                self.l2[f"interior.{name}.dx1_L2.r{r:g}.m{m}"] += eps * wz * _sq_norm(g, spec, wt * self.dx1)
        for name in ("identity", "L_ff_sigma"):
            key = f"interior.{name}.max"
            self.mx[key] = max(self.mx[key], float(np.abs(R[name]).max()))
        # slow derivative of the cut-off corrector
        tx = self.fields.to_physical(self.fields.tau_band(z, (0, 1, 0, 0, 0)))
        spec = sp.transform(g, tx)
        for (r, m), wt in self.W.items():
            n2 = _sq_norm(g, spec, wt)
            self.l2[f"tau.dx1.L2.r{r:g}.m{m}"] += eps * wz * n2
            k = f"tau.dx1.sup.r{r:g}.m{m}"
            self.sup[k] = max(self.sup[k], np.sqrt(n2))

    def finish(self) -> Dict[str, float]:
        g, model = self.bundle.grid, self.bundle.model
        out: Dict[str, float] = {}
        B = boundary_residual(self.fields, model, self.bundle.G)
        for name in BOUNDARY_GROUPS + ("solvability", "h_a", "total"):
            spec = sp.transform(g, B[name])
            for (r, m), wt in self.W.items():
                out[f"boundary.{name}.r{r:g}.m{m}"] = np.sqrt(_sq_norm(g, spec, wt))
        for name in ("identity", "ell_f_sigma"):
            self.mx[f"boundary.{name}.max"] = float(np.abs(B[name]).max())
        out.update({k: float(np.sqrt(v)) for k, v in self.l2.items()})
        out.update(self.sup)
        out.update(self.mx)
        out["p"] = CutoffSpec(self.b_exp).p(self.eps)
        return out


def _run_points(bundle: ProfileBundle, eps_list, b_exp, gamma, r_menu, m_menu, order, workers):
    cache: dict = {}
    accs = [_Accumulator(bundle, e, b_exp, gamma, r_menu, m_menu, cache) for e in eps_list]
    panels = {}
    for acc in accs:
        for i, (z, w) in enumerate(z_panels(acc.eps, order)):
            panels.setdefault((z[0], z[-1]), []).append((acc, z, w))
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None

    def work(item):
        acc, z, w = item
        if acc.error is not None:
            return
        try:
            for zz, ww in zip(z, w):
                acc.node(float(zz), float(ww))
        except Exception as exc:     # isolate per-eps failures
            acc.error = f"{type(exc).__name__}: {exc}"
            log.warning("sweep point eps=%g failed: %s", acc.eps, exc)

    try:
        for key in sorted(panels):
            items = panels[key]
            z_all = np.unique(np.concatenate([it[1] for it in items]))
            try:
                items[0][0].fields.preload(z_all)
            except Exception as exc:
                log.warning("corrector slots failed on depth panel %s: %s", key, exc)
            if pool is not None:
                list(pool.map(work, items))
            else:
                for it in items:
                    work(it)
            cache.clear()
    finally:
        if pool is not None:
            pool.shutdown()
    results = []
    for acc in accs:
        if acc.error is None:
            try:
                results.append((acc.eps, acc.finish(), None))
                continue
            except Exception as exc:
                acc.error = f"{type(exc).__name__}: {exc}"
        results.append((acc.eps, None, acc.error))
    return results


def sweep_point(bundle: ProfileBundle, eps: float, b_exp: float = 0.4, gamma: float = 1.0,
                r_menu: Sequence[float] = R_MENU, m_menu: Sequence[int] = M_MENU,
                order: int = 8) -> Dict[str, float]:
    """All norms at one ``eps``."""
    (_, vals, err), = _run_points(bundle, [eps], b_exp, gamma, r_menu, m_menu, order, 1)
    if err is not None:
        raise RuntimeError(err)
    return vals


def sweep(bundle: ProfileBundle, eps_list: Sequence[float] = tuple(2.0 ** -np.arange(3, 9)),
          b_exp: float = 0.4, gamma: float = 1.0, workers: int = 1, order: int = 8,
          tol: float = 0.15, r_menu: Sequence[float] = R_MENU,
          m_menu: Sequence[int] = M_MENU) -> ResidualReport:
    """Evaluate every ``eps``; failures are recorded per point and the sweep continues."""
    rep = ResidualReport()
    rep.exponents, rep.floors = predicted_checks(b_exp, tol)
    rep.meta = {"b_exp": b_exp, "gamma": gamma, "eps": [float(e) for e in eps_list],
                "fredholm": float(np.abs(bundle.cp.fredholm).max()
                                  / max(np.abs(bundle.cp.fredholm_scale).max(), 1e-300)),
                "snapshot_t": bundle.t,
                "r_menu": [float(r) for r in r_menu], "m_menu": [int(m) for m in m_menu]}

    results = _run_points(bundle, list(eps_list), b_exp, gamma, r_menu, m_menu, order, workers)
    for eps, vals, err in results:
        if err is not None:
            rep.failures[repr(float(eps))] = err
            continue
        for name, v in vals.items():
            rep.add(eps, name, v)
    return rep.evaluate()


run_sweep = sweep
