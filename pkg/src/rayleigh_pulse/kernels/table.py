"""Dense kernel tables on the dealiased band and their on-disk cache."""

from __future__ import annotations

import hashlib
import io
import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..material import RayleighData
from .elementary import CubicCoefficients, full_kernel

log = logging.getLogger(__name__)

CACHE_MAGIC = b"RPKT"
CACHE_VERSION = 1


class TableMemoryError(MemoryError):
    """Raised when a requested table exceeds the configured size limit."""


@dataclass(frozen=True)
class KernelTable:
    """``Lambda(k_i, k_j)`` on a symmetric band excluding ``k = 0``.

    Attributes
    ----------
    k_grid : ndarray
        Band frequencies ``n dk`` for ``n = -K..K`` with ``n != 0``.
    values : ndarray
        ``Lambda(k_i, k_j)``; cells with ``k_i + k_j = 0`` hold 0.
    c0 : float
    prefactor : float
        ``-1 / (4 pi c0)``.
    """

    k_grid: np.ndarray
    values: np.ndarray
    c0: float
    prefactor: float

    @property
    def scaled(self) -> np.ndarray:
        return self.prefactor * self.values

    def zeroed(self) -> "KernelTable":
        """Same grid with every cell set to zero (linear problems)."""
        return KernelTable(self.k_grid, np.zeros_like(self.values), self.c0, self.prefactor)


def band_grid(dk: float, K: int) -> np.ndarray:
    n = np.arange(-K, K + 1)
    n = n[n != 0]
    return n * dk


def build_kernel_table(cc: CubicCoefficients, rd: RayleighData, k_grid,
                       max_cells: int = 4_000_000, chunk: int = 200_000) -> KernelTable:
    """Evaluate ``Lambda`` on every cell of ``k_grid x k_grid``.

    The grid must be symmetric and exclude zero.
    """
    k = np.asarray(k_grid, dtype=float)
    if np.any(k == 0):
        raise ValueError("k_grid must exclude 0")
    if not np.allclose(np.sort(k), np.sort(-k), rtol=0, atol=1e-12 * np.abs(k).max()):
        raise ValueError("k_grid must be symmetric")
    n = k.size
    if n * n > max_cells:
        raise TableMemoryError(f"table with {n * n} cells exceeds limit {max_cells}")
    K1, K2 = np.meshgrid(k, k, indexing="ij")
    S = K1 + K2
    valid = np.abs(S) > 1e-9 * np.abs(k).max()
    vals = np.zeros((n, n), dtype=complex)
    i1, i2 = np.nonzero(np.triu(valid))
    # symmetric in (k, k'): evaluate the upper triangle and mirror
    for s in range(0, i1.size, chunk):
        a, b = i1[s:s + chunk], i2[s:s + chunk]
        vals[a, b] = full_kernel(cc, rd, -(k[a] + k[b]), k[a], k[b])
    vals = np.triu(vals) + np.triu(vals, 1).T
    pref = -1.0 / (4.0 * np.pi * rd.c0)
    return KernelTable(k_grid=k, values=vals, c0=rd.c0, prefactor=pref)


def material_hash(lam: float, mu: float, beta) -> str:
    payload = json.dumps({"lambda": float(lam), "mu": float(mu),
                          "beta": [float(b) for b in beta]}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def grid_hash(k_grid) -> str:
    return hashlib.sha256(np.ascontiguousarray(k_grid, dtype=float).tobytes()).hexdigest()[:16]


def save_table(path, table: KernelTable, mat_hash: str) -> None:
    """Write header + row-major complex64 payload."""
    payload = np.ascontiguousarray(table.values, dtype=np.complex64).tobytes()
    header = {
        "version": CACHE_VERSION,
        "n": int(table.k_grid.size),
        "k_min": float(table.k_grid.min()),
        "k_max": float(table.k_grid.max()),
        "grid_hash": grid_hash(table.k_grid),
        "material_hash": mat_hash,
        "c0": table.c0,
        "prefactor": table.prefactor,
        "k_grid": table.k_grid.tolist(),
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
    }
    hb = json.dumps(header).encode()
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<II", CACHE_VERSION, len(hb)))
        fh.write(hb)
        fh.write(payload)


def load_table(path, mat_hash: Optional[str] = None, k_grid=None) -> Optional[KernelTable]:
    """Read a cached table; ``None`` if missing, corrupted or keyed differently."""
    path = Path(path)
    if not path.exists():
        return None
    try:
        raw = path.read_bytes()
        if raw[:4] != CACHE_MAGIC:
            raise ValueError("bad magic")
        version, hlen = struct.unpack("<II", raw[4:12])
        if version != CACHE_VERSION:
            raise ValueError(f"version {version}")
        header = json.loads(raw[12:12 + hlen].decode())
        payload = raw[12 + hlen:]
        if hashlib.sha256(payload).hexdigest() != header["payload_sha256"]:
            raise ValueError("payload checksum mismatch")
        n = header["n"]
        vals = np.frombuffer(payload, dtype=np.complex64).reshape(n, n).astype(complex)
    except Exception as exc:  # noqa: BLE001 - any parse failure means rebuild
        log.warning("kernel cache %s unreadable (%s); rebuilding", path, exc)
        return None
    kg = np.asarray(header["k_grid"], dtype=float)
    if mat_hash is not None and header["material_hash"] != mat_hash:
        return None
    if k_grid is not None and header["grid_hash"] != grid_hash(k_grid):
        return None
    return KernelTable(k_grid=kg, values=vals, c0=header["c0"], prefactor=header["prefactor"])


def export_csv(path, table: KernelTable) -> None:
    """Long-format CSV ``k, kp, re, im`` of the nonzero cells."""
    K1, K2 = np.meshgrid(table.k_grid, table.k_grid, indexing="ij")
    m = table.values != 0
    data = np.column_stack([K1[m], K2[m], table.values[m].real, table.values[m].imag])
    buf = io.StringIO()
    np.savetxt(buf, data, delimiter=",", header="k,kp,re,im", comments="", fmt="%.10e")
    Path(path).write_text(buf.getvalue())
