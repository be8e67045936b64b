"""Residual report: per-eps norms, exponent fits and their emission."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from ..spectral import power_fit


@dataclass
class ExponentCheck:
    """A fitted exponent against its predicted value."""

    name: str
    predicted: float
    tol: float = 0.15
    min_r2: float = 0.98
    exponent: float = float("nan")
    r2: float = float("nan")
    note: str = ""

    @property
    def margin(self) -> float:
        return self.tol - abs(self.exponent - self.predicted)

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.exponent) and self.margin >= 0 and self.r2 >= self.min_r2)


@dataclass
class FloorCheck:
    """A quantity that must stay below ``threshold`` for every eps."""

    name: str
    threshold: float = 1e-9
    worst: float = float("nan")

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.worst) and self.worst < self.threshold)


@dataclass
class ResidualReport:
    rows: List[Dict] = field(default_factory=list)          # eps, name, value
    exponents: List[ExponentCheck] = field(default_factory=list)
    floors: List[FloorCheck] = field(default_factory=list)
    failures: Dict[str, str] = field(default_factory=dict)   # eps -> message
    meta: Dict = field(default_factory=dict)

    def add(self, eps: float, name: str, value: float):
        self.rows.append({"eps": float(eps), "name": name, "value": float(value)})

    def series(self, name: str):
        pts = sorted((r["eps"], r["value"]) for r in self.rows if r["name"] == name)
        if not pts:
            return np.array([]), np.array([])
        e, v = zip(*pts)
        return np.array(e), np.array(v)

    def names(self) -> List[str]:
        return sorted({r["name"] for r in self.rows})

    def evaluate(self):
        """Fill in fits and floor maxima from the rows."""
        for chk in self.exponents:
            e, v = self.series(chk.name)
            try:
                chk.exponent, chk.r2 = power_fit(e, v)
            except ValueError as exc:
                chk.note = str(exc)
        for fl in self.floors:
            _, v = self.series(fl.name)
            fl.worst = float(np.max(np.abs(v))) if v.size else float("nan")
        return self

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.exponents) and all(f.passed for f in self.floors)

    @classmethod
    def load(cls, csv_path, json_path) -> "ResidualReport":
        """Rebuild a report from its CSV rows and JSON summary."""
        rep = cls()
        with open(csv_path, newline="") as fh:
            for r in csv.DictReader(fh):
                rep.add(float(r["eps"]), r["name"], float(r["value"]))
        summ = json.loads(Path(json_path).read_text())

        def num(x):
            return float("nan") if x is None else float(x)
        for c in summ.get("exponents", []):
            rep.exponents.append(ExponentCheck(c["name"], num(c["predicted"]), num(c["tol"]),
                                               num(c["min_r2"]), note=c.get("note", "")))
        for f in summ.get("floors", []):
            rep.floors.append(FloorCheck(f["name"], num(f["threshold"])))
        rep.failures = dict(summ.get("failures", {}))
        rep.meta = dict(summ.get("meta", {}))
        return rep.evaluate()

    # ------------------------------------------------------------ emission
    def summary(self) -> Dict:
        return {
            "exponents": [dict(asdict(c), margin=c.margin, passed=c.passed) for c in self.exponents],
            "floors": [dict(asdict(f), passed=f.passed) for f in self.floors],
            "failures": self.failures,
            "passed": self.passed,
            "meta": self.meta,
        }

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["eps", "name", "value"])
            w.writeheader()
            for r in sorted(self.rows, key=lambda r: (r["name"], r["eps"])):
                w.writerow({"eps": repr(r["eps"]), "name": r["name"], "value": repr(r["value"])})

    def write_json(self, path):
        def clean(x):
            if isinstance(x, float) and not np.isfinite(x):
                return None
            if isinstance(x, dict):
                return {k: clean(v) for k, v in x.items()}
            if isinstance(x, list):
                return [clean(v) for v in x]
            return x
        Path(path).write_text(json.dumps(clean(self.summary()), indent=2, sort_keys=True))

    def write_gnuplot(self, path, csv_name: str = "residuals.csv"):
        """Script drawing log-log plots of every fitted series from the CSV."""
        lines = ["set datafile separator ','", "set logscale xy", "set key left top",
                 "set xlabel 'eps'", "set terminal pngcairo size 800,600"]
        for i, chk in enumerate(self.exponents):
            safe = chk.name.replace("'", "")
            lines += [f"set output 'fit_{i:02d}.png'",
                      f"set title '{safe}: slope {chk.exponent:.3f} (predicted {chk.predicted:.3f})'",
                      f"plot '{csv_name}' using (stringcolumn(2) eq '{safe}' ? $1 : 1/0):3 "
                      f"with linespoints title '{safe}'"]
        Path(path).write_text("\n".join(lines) + "\n")

    def write_png(self, out_dir, prefix: str = "fit"):
        """Log-log PNGs of the fitted series, rendered with the Agg backend."""
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        out = []
        for i, chk in enumerate(self.exponents):
            e, v = self.series(chk.name)
            ok = v > 0
            if ok.sum() < 2:
                continue
            fig, ax = plt.subplots(figsize=(5, 4))
            ax.loglog(e[ok], v[ok], "o-", label="measured")
            if np.isfinite(chk.exponent):
                ref = v[ok][-1] * (e[ok] / e[ok][-1]) ** chk.predicted
                ax.loglog(e[ok], ref, "--", label=f"slope {chk.predicted:.2f}")
            ax.set_xlabel("eps")
            ax.set_title(f"{chk.name}\nfit {chk.exponent:.3f}, r2 {chk.r2:.4f}", fontsize=8)
            ax.legend(fontsize=8)
            fig.tight_layout()
            p = Path(out_dir) / f"{prefix}_{i:02d}.png"
            fig.savefig(p, dpi=100)
            plt.close(fig)
            out.append(p)
        return out
