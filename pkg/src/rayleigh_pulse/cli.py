"""Command line pipeline: material, kernel table, solve, corrector, sweep, report.

Each command writes into ``--out`` and records file digests in
``manifest.json``.  Later commands reuse earlier artifacts when the stage
hash stored beside them matches the current configuration.

Exit codes: 0 ok, 1 configuration error, 2 invariant failure, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import logging
import math
import platform
import sys
from importlib import metadata
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import numpy as np

from . import __version__
from . import amplitude as am
from . import spectral as sp
from .corrector import diagnostics as cdiag
from .harness.report import ResidualReport
from .harness.sweep import (ArrayForce, ForceSpec, bundle_from_state, run_sweep,
                             solve_amplitude)
from .kernels import table as ktable
from .kernels import verify as kverify
from .kernels.elementary import CubicCoefficients
from .material import (ConstitutiveError, InternalConsistencyError, compute_c0,
                       dispersion_residual, modal_frame, profile_coefficients, solve_rayleigh,
                       wave_speeds)

log = logging.getLogger("rayleigh_pulse")

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_NUMERICAL = 0, 1, 2, 3


class ConfigError(ValueError):
    """Malformed or out-of-range configuration."""


class InvariantFailure(RuntimeError):
    """A computed quantity violates one of its checked identities."""


# --------------------------------------------------------------------- config

def _num(lo=-math.inf, hi=math.inf, lo_open=False, integer=False):
    def check(key, v):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {v!r}")
        if integer and int(v) != v:
            raise ConfigError(f"{key}: expected an integer, got {v!r}")
        if not math.isfinite(v):
            raise ConfigError(f"{key}: must be finite")
        if v < lo or (lo_open and v == lo) or v > hi:
            raise ConfigError(f"{key}: {v!r} outside the allowed range")
        return int(v) if integer else float(v)
    return check


def _pow2(key, v):
    v = _num(8, 1 << 16, integer=True)(key, v)
    if v & (v - 1):
        raise ConfigError(f"{key}: must be a power of two, got {v}")
    return v


def _num_list(item, minlen=1):
    def check(key, v):
        if not isinstance(v, list) or len(v) < minlen:
            raise ConfigError(f"{key}: expected a list of at least {minlen} numbers")
        return [item(f"{key}[{i}]", x) for i, x in enumerate(v)]
    return check


def _optional(check):
    def inner(key, v):
        return None if v is None else check(key, v)
    return inner


def _beta(key, v):
    return _num_list(_num(), 4)(key, v) if v is not None else None


def _kind(key, v):
    if v not in ("gaussian-packet", "file", "none"):
        raise ConfigError(f"{key}: expected 'gaussian-packet', 'file' or 'none', got {v!r}")
    return v


SCHEMA: Dict[str, Dict[str, tuple]] = {
    "material": {
        "lambda": (_num(), 1.0),
        "mu": (_num(), 1.0),
        "beta_overrides": (_beta, None),
    },
    "grid": {
        "L_x1": (_num(0, lo_open=True), 32.0),
        "N_x1": (_pow2, 64),
        "L_theta": (_num(0, lo_open=True), 2 * math.pi * 24),
        "N_theta": (_pow2, 256),
    },
    "solver": {
        "dt": (_num(0, lo_open=True), 0.02),
        "T": (_num(0, lo_open=True), 2.0),
        "m": (_num(0, 64, integer=True), 6),
        "gamma": (_num(1.0), 1.0),
        "checkpoint_every": (_optional(_num(1, integer=True)), None),
    },
    "boundary_force": {
        "kind": (_kind, "gaussian-packet"),
        "parameters": (None, {}),
    },
    "cutoff": {
        "b_exp": (_num(0, 1, lo_open=True), 0.4),
    },
    "sweep": {
        "eps_list": (_num_list(_num(0, 1, lo_open=True)), [2.0 ** -n for n in range(3, 9)]),
        "norms": (None, {}),
        "order": (_num(2, 32, integer=True), 8),
        "tol": (_num(0, lo_open=True), 0.15),
    },
}

PACKET_PARAMS = {
    "amplitude": (_num(), 0.05),
    "sigma_x1": (_num(0, lo_open=True), 2.0),
    "sigma_theta": (_num(0, lo_open=True), 3.0),
    "direction": (_num_list(_num(), 2), [0.0, 1.0]),
    "ramp": (_num(0, lo_open=True), 1.0),
}
FILE_PARAMS = {
    "path": (None, None),
    "ramp": (_num(0, lo_open=True), 1.0),
}
NORM_PARAMS = {
    "r": (_num_list(_num(0, 4)), [0.0, 0.5, 1.0, 1.5]),
    "m": (_num_list(_num(0, 8, integer=True)), [0, 2]),
}


def _fill(section: str, spec: Dict[str, tuple], given: Any) -> Dict[str, Any]:
    if given is None:
        given = {}
    if not isinstance(given, dict):
        raise ConfigError(f"{section}: expected an object")
    unknown = set(given) - set(spec)
    if unknown:
        raise ConfigError(f"{section}: unknown keys {sorted(unknown)}")
    out = {}
    for key, (check, default) in spec.items():
        v = given.get(key, copy.deepcopy(default))
        out[key] = check(f"{section}.{key}", v) if (check is not None and key in given) else v
    return out


def validate_config(raw: Any, base_dir: Optional[Path] = None) -> Dict[str, Any]:
    """Check ``raw`` against the schema and fill defaults.

    Raises
    ------
    ConfigError
        Unknown keys, wrong types, or values outside module preconditions.
    """
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(raw) - set(SCHEMA)
    if unknown:
        raise ConfigError(f"unknown sections {sorted(unknown)}")
    cfg = {s: _fill(s, spec, raw.get(s)) for s, spec in SCHEMA.items()}

    f = cfg["boundary_force"]
    if f["kind"] == "gaussian-packet":
        f["parameters"] = _fill("boundary_force.parameters", PACKET_PARAMS, f["parameters"])
    elif f["kind"] == "file":
        f["parameters"] = _fill("boundary_force.parameters", FILE_PARAMS, f["parameters"])
        path = f["parameters"]["path"]
        if not isinstance(path, str) or not path:
            raise ConfigError("boundary_force.parameters.path: expected a file path")
        p = Path(path)
        if not p.is_absolute() and base_dir is not None:
            p = base_dir / p
        f["parameters"]["path"] = str(p)
    else:
        if f["parameters"] not in ({}, None):
            raise ConfigError("boundary_force.parameters: must be empty for kind 'none'")
        f["parameters"] = {}
    cfg["sweep"]["norms"] = _fill("sweep.norms", NORM_PARAMS, cfg["sweep"]["norms"])
    if len(cfg["sweep"]["eps_list"]) < 4:
        raise ConfigError("sweep.eps_list: exponent fits need at least 4 values")

    g = cfg["grid"]
    s = cfg["solver"]
    if s["dt"] > s["T"]:
        raise ConfigError("solver.dt must not exceed solver.T")
    if g["N_theta"] // 3 < 4:
        raise ConfigError("grid.N_theta leaves fewer than 4 retained wavenumbers")
    return cfg


def load_config(path: Optional[str]) -> Dict[str, Any]:
    if path is None:
        return validate_config({})
    p = Path(path)
    try:
        raw = json.loads(p.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {p}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return validate_config(raw, p.parent)


def _digest(obj: Any) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


STAGE_SECTIONS = {
    "material": ("material",),
    "kernel-table": ("material", "grid"),
    "solve": ("material", "grid", "solver", "boundary_force"),
    "corrector": ("material", "grid", "solver", "boundary_force"),
    "sweep": ("material", "grid", "solver", "boundary_force", "cutoff", "sweep"),
}


def stage_hash(cfg: Dict[str, Any], stage: str) -> str:
    return _digest({s: cfg[s] for s in STAGE_SECTIONS[stage]})


# ------------------------------------------------------------------ pipeline

def _write_json(path: Path, obj: Any) -> None:
    def clean(x):
        if isinstance(x, float) and not math.isfinite(x):
            return None
        if isinstance(x, dict):
            return {str(k): clean(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [clean(v) for v in x]
        if isinstance(x, np.generic):
            return clean(x.item())
        return x
    path.write_text(json.dumps(clean(obj), indent=2, sort_keys=True) + "\n")


def _versions() -> Dict[str, str]:
    out = {"rayleigh_pulse": __version__, "python": platform.python_version()}
    for pkg in ("numpy", "scipy", "matplotlib"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "absent"
    return out


def _profile_json(rd) -> Dict[str, Any]:
    v1, v2, a1, a2 = profile_coefficients(rd)
    pair = lambda v: [[float(x.real), float(x.imag)] for x in v]
    return {"v1": pair(v1), "v2": pair(v2), "rate1": float(a1), "rate2": float(a2)}


class Pipeline:
    """Artifact directory plus the cached intermediate objects of one run."""

    def __init__(self, cfg: Dict[str, Any], out: Path, seed: int = 0, threads: int = 1):
        self.cfg = cfg
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.seed = int(seed)
        self.threads = max(1, int(threads))
        self._table = None
        self._state = None
        self._bundle = None
        m = cfg["material"]
        self.mc = wave_speeds(m["lambda"], m["mu"])
        beta = m["beta_overrides"]
        self.cc = CubicCoefficients(*beta) if beta is not None else CubicCoefficients.svk(self.mc)
        g = cfg["grid"]
        try:
            self.grid = sp.Grid2(g["L_x1"], g["N_x1"], g["L_theta"], g["N_theta"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        s = cfg["solver"]
        self.solver = am.SolverConfig(dt=s["dt"], T=s["T"], m=s["m"], gamma=s["gamma"])
        self.force = self._force()

    # -------------------------------------------------------------- helpers
    def _force(self):
        f = self.cfg["boundary_force"]
        p = f["parameters"]
        if f["kind"] == "none":
            return None
        if f["kind"] == "gaussian-packet":
            if p["amplitude"] == 0:
                return None
            return ForceSpec(amplitude=p["amplitude"], sigma_x1=p["sigma_x1"],
                                    sigma_theta=p["sigma_theta"],
                                    direction=tuple(p["direction"]), ramp=p["ramp"])
        try:
            vals = np.load(p["path"], allow_pickle=False)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read force file {p['path']}: {exc}") from exc
        force = ArrayForce(values=vals, ramp=p["ramp"])
        try:
            force.spatial(self.grid)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return force

    def manifest(self, stage: str, files) -> None:
        path = self.out / "manifest.json"
        man = json.loads(path.read_text()) if path.exists() else {}
        if man.get("config_sha256") != _digest(self.cfg):
            man = {}
        man["config_sha256"] = _digest(self.cfg)
        man["config"] = self.cfg
        man["seed"] = self.seed
        man["versions"] = _versions()
        man.setdefault("stages", {})[stage] = stage_hash(self.cfg, stage)
        digests = man.setdefault("files", {})
        for f in files:
            f = Path(f)
            digests[str(f.relative_to(self.out))] = hashlib.sha256(f.read_bytes()).hexdigest()
        _write_json(path, man)

    def _fresh(self, stage: str, *names: str) -> bool:
        """True when the stage summary matches the current configuration."""
        summ = self.out / names[0]
        if not all((self.out / n).exists() for n in names):
            return False
        try:
            data = json.loads(summ.read_text())
        except (OSError, json.JSONDecodeError):
            return False
        found = data.get("stage_hash", data.get("meta", {}).get("stage_hash"))
        return found == stage_hash(self.cfg, stage)

    # --------------------------------------------------------------- stages
    def material(self) -> Dict[str, Any]:
        rd = solve_rayleigh(self.mc)
        md = modal_frame(self.mc, rd)
        c = rd.c_R
        checks = {
            "dispersion_residual": float(abs(dispersion_residual(c, self.mc.r))),
            "q_identity": float(abs(2 - c * c - 2 * np.real(md.q))),
            "rate_identity": float(abs(4 * rd.omega1 * rd.omega2 - (rd.omega1 ** 2 + 1) ** 2)),
            "c0_forms": float(abs(compute_c0(rd) - rd.c0) / abs(rd.c0)),
            "lopatinskii_kernel": float(np.abs(md.B_lop @ md.ker_vec).max()),
            "lopatinskii_cokernel": float(np.abs(md.coker_vec @ md.B_lop).max()),
        }
        tol = {"dispersion_residual": 1e-12, "q_identity": 1e-12, "rate_identity": 1e-12,
               "c0_forms": 1e-10, "lopatinskii_kernel": 1e-10, "lopatinskii_cokernel": 1e-10}
        failed = sorted(k for k, v in checks.items() if not v <= tol[k])
        rep = {
            "stage_hash": stage_hash(self.cfg, "material"),
            "material": {"lambda": self.mc.lam, "mu": self.mc.mu, "c_S": self.mc.c_S,
                         "c_P": self.mc.c_P, "r": self.mc.r},
            "rayleigh": {"c_R": rd.c_R, "c_R_physical": rd.c_R_physical, "ratio_c_R_c_S": rd.c_R,
                         "omega1": rd.omega1, "omega2": rd.omega2, "q": rd.q, "c0": rd.c0,
                         "c0_physical": rd.c0_physical, "tau": rd.tau,
                         "profile": _profile_json(rd)},
            "modal": {"omega_imag": [float(np.imag(w)) for w in md.omega],
                      "ker": [[float(v.real), float(v.imag)] for v in md.ker_vec],
                      "coker": [[float(v.real), float(v.imag)] for v in md.coker_vec]},
            "cubic_coefficients": self.cc.as_array().tolist(),
            "checks": checks,
            "failed": failed,
        }
        path = self.out / "material.json"
        _write_json(path, rep)
        self.manifest("material", [path])
        if failed:
            raise InvariantFailure(f"material identities failed: {', '.join(failed)}")
        return rep

    def table(self):
        """Kernel table read back from the cache, so every stage sees the same values."""
        if self._table is not None:
            return self._table
        rd = solve_rayleigh(self.mc)
        kg = ktable.band_grid(self.grid.dk, self.grid.K_band)
        mh = ktable.material_hash(self.mc.lam, self.mc.mu, self.cc.as_array())
        path = self.out / "kernel_table.rpkt"
        tab = ktable.load_table(path, mh, kg)
        self.cache_hit = tab is not None
        if tab is None:
            ktable.save_table(path, ktable.build_kernel_table(self.cc, rd, kg), mh)
            tab = ktable.load_table(path, mh, kg)
            if tab is None:
                raise InvariantFailure("kernel cache does not read back")
        self._table = tab
        return tab

    def kernel_table(self) -> Dict[str, Any]:
        tab = self.table()
        rd = solve_rayleigh(self.mc)
        fit = kverify.canonical_fit_check(self.cc, rd, seed=self.seed)
        red = kverify.reduction_residuals(self.mc.r, seed=self.seed)
        bound = kverify.bound_constant(self.cc, rd, seed=self.seed)
        failed = []
        if not fit.residual < 1e-8:
            failed.append("canonical_fit")
        if not max(red.values()) <= 1e-12:
            failed.append("reductions")
        if not math.isfinite(bound):
            failed.append("bound_constant")
        summ = {
            "stage_hash": stage_hash(self.cfg, "kernel-table"),
            "cache": "hit" if self.cache_hit else "built",
            "n_band": int(tab.k_grid.size),
            "dk": float(self.grid.dk),
            "bound_constant": bound,
            "canonical_fit": {"coefficients": fit.coeffs.tolist(), "residual": fit.residual},
            "reductions": red,
            "failed": failed,
        }
        path = self.out / "kernel_summary.json"
        _write_json(path, summ)
        self.manifest("kernel-table", [self.out / "kernel_table.rpkt", path])
        if failed:
            raise InvariantFailure(f"kernel checks failed: {', '.join(failed)}")
        return summ

    def solve(self) -> Dict[str, Any]:
        names = ("solve_summary.json", "trajectory_times.npy", "trajectory_states.npy", "energy.csv")
        if self._fresh("solve", *names):
            log.info("solve: reusing artifacts in %s", self.out)
            return json.loads((self.out / names[0]).read_text())
        nsteps = int(round(self.solver.T / self.solver.dt))
        every = self.cfg["solver"]["checkpoint_every"] or max(1, nsteps // 10)
        traj = solve_amplitude(self.mc, self.grid, self.solver, self.force, self.cc,
                                      self.table(), keep_every=every)
        states = np.stack([s.what for s in traj.states])
        if not np.all(np.isfinite(states)):
            raise am.NumericalFailure("non-finite amplitude values")
        np.save(self.out / names[1], traj.times)
        np.save(self.out / names[2], states)
        am.write_energy_csv(traj, self.out / names[3])
        fin = traj.final.what
        summ = {
            "stage_hash": stage_hash(self.cfg, "solve"),
            "steps": nsteps,
            "checkpoints": len(traj.states),
            "t_final": traj.final.t,
            "L2_final": am.hm_norm(self.grid, fin, 0),
            "Hm_final": am.hm_norm(self.grid, fin, self.solver.m, self.solver.gamma),
            "apriori_constant": am.apriori_constant(traj),
            "hermitian_defect": sp.hermitian_defect(self.grid, fin) if np.abs(fin).max() > 0 else 0.0,
        }
        _write_json(self.out / names[0], summ)
        self.manifest("solve", [self.out / n for n in names])
        return summ

    def state(self):
        if self._state is None:
            self.solve()
            t = np.load(self.out / "trajectory_times.npy")
            w = np.load(self.out / "trajectory_states.npy")
            self._state = (float(t[-1]), w[-1])
        return self._state

    def bundle(self):
        if self._bundle is None:
            t, w = self.state()
            self._bundle = bundle_from_state(self.mc, self.grid, w, t, self.force,
                                                    self.cc, self.table())
        return self._bundle

    def corrector(self) -> Dict[str, Any]:
        names = ("corrector_summary.json", "corrector.csv")
        if self._fresh("corrector", *names) and (self.out / "profiles").is_dir():
            log.info("corrector: reusing artifacts in %s", self.out)
            return json.loads((self.out / names[0]).read_text())
        b = self.bundle()
        pb, cp = b.pb, b.cp
        k = pb.band.k
        sup = cdiag.tau_sup(pb, b.sig, cp)
        coker = np.abs(cp.coker_residual).max(axis=0)
        fred = np.abs(cdiag.project_x1(self.grid, cp.fredholm)).max(axis=0)
        scale = np.abs(cp.fredholm_scale).max(axis=0)
        sel = k > 0
        csv_path = self.out / names[1]
        np.savetxt(csv_path, np.column_stack([k[sel], sup[sel], coker[sel], fred[sel], scale[sel]]),
                   delimiter=",", header="k,tau_sup,coker_residual,fredholm,fredholm_scale",
                   comments="", fmt="%.12e")
        try:
            expo, r2 = cdiag.tau_scaling_fit(k, sup)
            note = ""
        except ValueError as exc:
            expo, r2, note = float("nan"), float("nan"), str(exc)
        fred_norm = cdiag.fredholm_normalized(self.grid, cp)
        ratio, spread = cdiag.cokernel_fredholm_ratio(pb, cp)
        pdir = self.out / "profiles"
        pdir.mkdir(exist_ok=True)
        arrays = {"k": k, "sigma_X": b.sig.X, "A0": cp.A0, "A1": cp.A1, "X0": cp.X0,
                  "X1": cp.X1, "N0": cp.N0, "N1": cp.N1, "tau_star": cp.tau_star, "rhs": cp.rhs}
        files = [csv_path]
        for name, arr in arrays.items():
            np.save(pdir / f"{name}.npy", arr)
            files.append(pdir / f"{name}.npy")
        failed = []
        if not cp.range_residual <= 1e-12:
            failed.append("range_residual")
        if not fred_norm < 1e-6:
            failed.append("fredholm")
        if not coker.max() < 1e-6:
            failed.append("coker_residual")
        summ = {
            "stage_hash": stage_hash(self.cfg, "corrector"),
            "t": b.t,
            "range_residual": cp.range_residual,
            "fredholm_normalized": fred_norm,
            "coker_residual_max": float(coker.max()),
            "coker_fredholm_ratio": {"value": ratio, "spread": spread},
            "tau_exponent": {"value": expo, "r2": r2, "window": [0.0, 0.2],
                             "expected_range": [-2.2, -1.8],
                             "in_range": bool(math.isfinite(expo) and -2.2 <= expo <= -1.8),
                             "note": note},
            "failed": failed,
        }
        _write_json(self.out / names[0], summ)
        self.manifest("corrector", [self.out / names[0]] + files)
        if failed:
            raise InvariantFailure(f"corrector checks failed: {', '.join(failed)}")
        return summ

    def sweep(self) -> ResidualReport:
        names = ("residuals.json", "residuals.csv", "residuals.gp")
        if self._fresh("sweep", *names):
            log.info("sweep: reusing artifacts in %s", self.out)
            return ResidualReport.load(self.out / names[1], self.out / names[0])
        sw = self.cfg["sweep"]
        rep = run_sweep(self.bundle(), sw["eps_list"], b_exp=self.cfg["cutoff"]["b_exp"],
                           gamma=self.cfg["solver"]["gamma"], workers=self.threads,
                           order=sw["order"], tol=sw["tol"], r_menu=sw["norms"]["r"],
                           m_menu=sw["norms"]["m"])
        rep.meta["stage_hash"] = stage_hash(self.cfg, "sweep")
        rep.write_csv(self.out / names[1])
        rep.write_json(self.out / names[0])
        rep.write_gnuplot(self.out / names[2], names[1])
        self.manifest("sweep", [self.out / n for n in names])
        bad = [f.name for f in rep.floors if not f.passed and math.isfinite(f.worst)]
        if bad:
            raise InvariantFailure(f"exactness floors exceeded: {', '.join(bad)}")
        return rep

    def report(self):
        self.corrector()
        rep = self.sweep()
        fig_dir = self.out / "figures"
        fig_dir.mkdir(exist_ok=True)
        files = list(rep.write_png(fig_dir))
        files += _extra_figures(self.out, fig_dir)
        rep.write_gnuplot(self.out / "residuals.gp", "residuals.csv")
        self.manifest("sweep", files + [self.out / "residuals.gp"])
        return files


def _extra_figures(out: Path, fig_dir: Path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    files = []
    energy = out / "energy.csv"
    if energy.exists():
        e = np.atleast_2d(np.loadtxt(energy, delimiter=",", skiprows=1))
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.plot(e[:, 0], e[:, 1], label="L2")
        ax.plot(e[:, 0], e[:, 2], label="Hm")
        ax.set_xlabel("t")
        ax.legend(fontsize=8)
        fig.tight_layout()
        p = fig_dir / "energy.png"
        fig.savefig(p, dpi=100)
        plt.close(fig)
        files.append(p)
    corr = out / "corrector.csv"
    if corr.exists():
        c = np.atleast_2d(np.loadtxt(corr, delimiter=",", skiprows=1))
        ok = (c[:, 1] > 0) if c.size else np.zeros(0, bool)
        if ok.sum() >= 2:
            fig, ax = plt.subplots(figsize=(5, 4))
            ax.loglog(c[ok, 0], c[ok, 1], "o-", ms=3)
            ax.set_xlabel("k")
            ax.set_ylabel("sup |tau|")
            fig.tight_layout()
            p = fig_dir / "tau_small_k.png"
            fig.savefig(p, dpi=100)
            plt.close(fig)
            files.append(p)
    return files


# ----------------------------------------------------------------------- main

COMMANDS: Dict[str, Callable[[Pipeline], Any]] = {
    "material": Pipeline.material,
    "kernel-table": Pipeline.kernel_table,
    "solve": Pipeline.solve,
    "corrector": Pipeline.corrector,
    "sweep": Pipeline.sweep,
    "report": Pipeline.report,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rayleigh-pulse", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", metavar="PATH", help="JSON run configuration")
    ap.add_argument("--out", metavar="DIR", default="out", help="artifact directory")
    ap.add_argument("--seed", metavar="N", type=int, default=0, help="seed for sampled checks")
    ap.add_argument("--threads", metavar="N", type=int, default=1, help="sweep worker threads")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        pipe = Pipeline(cfg, Path(args.out), seed=args.seed, threads=args.threads)
        COMMANDS[args.command](pipe)
    except (ConfigError, ConstitutiveError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvariantFailure, InternalConsistencyError) as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (am.NumericalFailure, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
