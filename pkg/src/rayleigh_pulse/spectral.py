"""Periodic grids, transforms in the integral convention, and singular norms.

A field lives on the origin-centred box ``[-L/2, L/2)`` in ``x1`` and in
``theta``.  Its spectrum approximates ``int exp(-i (xi1 x1 + k theta)) f``,
so quadrature weights and the ``(-1)^n`` phase of the centred box are part
of the forward transform.  Arrays carry the ``(x1, theta)`` axes last.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Grid2:
    """Uniform periodic grid on ``(x1, theta)``."""

    L_x1: float
    N_x1: int
    L_theta: float
    N_theta: int

    def __post_init__(self):
        for n in (self.N_x1, self.N_theta):
            if n < 8 or n & (n - 1):
                raise ValueError(f"grid sizes must be powers of two >= 8, got {n}")
        if self.L_x1 <= 0 or self.L_theta <= 0:
            raise ValueError("box lengths must be positive")

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.N_x1, self.N_theta)

    @property
    def dx1(self) -> float:
        return self.L_x1 / self.N_x1

    @property
    def dtheta(self) -> float:
        return self.L_theta / self.N_theta

    @property
    def dk(self) -> float:
        return 2 * np.pi / self.L_theta

    @property
    def dxi(self) -> float:
        return 2 * np.pi / self.L_x1

    @property
    def x1(self) -> np.ndarray:
        return -0.5 * self.L_x1 + self.dx1 * np.arange(self.N_x1)

    @property
    def theta(self) -> np.ndarray:
        return -0.5 * self.L_theta + self.dtheta * np.arange(self.N_theta)

    @property
    def xi1(self) -> np.ndarray:
        return self.dxi * np.fft.fftfreq(self.N_x1, 1.0 / self.N_x1)

    @property
    def k(self) -> np.ndarray:
        return self.dk * np.fft.fftfreq(self.N_theta, 1.0 / self.N_theta)

    @property
    def n_k(self) -> np.ndarray:
        """Integer wavenumbers of the theta axis (FFT order)."""
        return np.fft.fftfreq(self.N_theta, 1.0 / self.N_theta).round().astype(int)

    @property
    def K_band(self) -> int:
        """Largest retained integer wavenumber under the 2/3 rule."""
        return self.N_theta // 3

    @property
    def K_band_x1(self) -> int:
        return self.N_x1 // 3

    def mesh(self):
        return np.meshgrid(self.x1, self.theta, indexing="ij")

    def refine_theta(self, factor: int = 2) -> "Grid2":
        return Grid2(self.L_x1, self.N_x1, self.L_theta, self.N_theta * factor)


def _phase(n: int) -> np.ndarray:
    m = np.fft.fftfreq(n, 1.0 / n).round().astype(int)
    return np.where(m % 2 == 0, 1.0, -1.0)


def _check(grid: Grid2, arr: np.ndarray):
    if arr.shape[-2:] != grid.shape:
        raise ValueError(f"array trailing shape {arr.shape[-2:]} does not match grid {grid.shape}")


def transform(grid: Grid2, field: np.ndarray) -> np.ndarray:
    """Forward transform in the integral convention."""
    field = np.asarray(field)
    _check(grid, field)
    ph = _phase(grid.N_x1)[:, None] * _phase(grid.N_theta)[None, :]
    return grid.dx1 * grid.dtheta * ph * np.fft.fft2(field, axes=(-2, -1))


def inverse(grid: Grid2, spec: np.ndarray, real: bool = True) -> np.ndarray:
    """Inverse of :func:`transform`; returns the real part when ``real``."""
    spec = np.asarray(spec)
    _check(grid, spec)
    ph = _phase(grid.N_x1)[:, None] * _phase(grid.N_theta)[None, :]
    f = np.fft.ifft2(spec * ph, axes=(-2, -1)) / (grid.dx1 * grid.dtheta)
    return f.real if real else f


def to_mixed(grid: Grid2, spec: np.ndarray) -> np.ndarray:
    """Spectrum on ``(xi1, k)`` to the mixed representation ``(x1, k)``."""
    ph = _phase(grid.N_x1)[:, None]
    return np.fft.ifft(spec * ph, axis=-2) / grid.dx1


def from_mixed(grid: Grid2, mixed: np.ndarray) -> np.ndarray:
    """Mixed ``(x1, k)`` values back to the full spectrum."""
    ph = _phase(grid.N_x1)[:, None]
    return grid.dx1 * ph * np.fft.fft(mixed, axis=-2)


def theta_transform(grid: Grid2, field: np.ndarray) -> np.ndarray:
    """Transform in ``theta`` only: physical ``(x1, theta)`` to mixed ``(x1, k)``."""
    return grid.dtheta * _phase(grid.N_theta) * np.fft.fft(field, axis=-1)


def theta_inverse(grid: Grid2, mixed: np.ndarray, real: bool = True) -> np.ndarray:
    f = np.fft.ifft(mixed * _phase(grid.N_theta), axis=-1) / grid.dtheta
    return f.real if real else f


def enforce_hermitian(grid: Grid2, spec: np.ndarray) -> np.ndarray:
    """Project onto spectra of real fields: ``(c(xi, k) + conj c(-xi, -k)) / 2``."""
    flip = np.conj(np.roll(np.flip(spec, axis=(-2, -1)), 1, axis=(-2, -1)))
    return 0.5 * (spec + flip)


def hermitian_defect(grid: Grid2, spec: np.ndarray) -> float:
    flip = np.conj(np.roll(np.flip(spec, axis=(-2, -1)), 1, axis=(-2, -1)))
    scale = max(np.abs(spec).max(), 1e-300)
    return float(np.abs(spec - flip).max() / scale)


def hilbert(grid: Grid2, spec: np.ndarray) -> np.ndarray:
    """Multiplier ``-i sgn(k)`` on the theta frequency."""
    return -1j * np.sign(grid.k) * spec


def dealias_mask(grid: Grid2) -> np.ndarray:
    """Boolean ``(N_x1, N_theta)`` mask of retained modes; Nyquist and ``k = 0`` dropped."""
    nk = np.abs(grid.n_k)
    nx = np.abs(np.fft.fftfreq(grid.N_x1, 1.0 / grid.N_x1).round().astype(int))
    keep_k = (nk <= grid.K_band) & (nk > 0)
    keep_x = nx <= grid.K_band_x1
    return keep_x[:, None] & keep_k[None, :]


def dealias(grid: Grid2, spec: np.ndarray) -> np.ndarray:
    """2/3-rule truncation; also removes the excluded ``k = 0`` column."""
    return spec * dealias_mask(grid)


def band_indices(grid: Grid2) -> np.ndarray:
    """FFT-order indices of the band ``n = -K..K`` (``n = 0`` included)."""
    K = grid.K_band
    return np.arange(-K, K + 1) % grid.N_theta


def singular_weight(grid: Grid2, r: float, m: int, gamma: float, eps: float,
                    beta: Sequence[float]) -> np.ndarray:
    """``(|xi' + beta k / eps|^2 + gamma^2)^{r/2} <xi1, k, gamma>^m`` with ``xi' = (0, xi1)``."""
    xi = grid.xi1[:, None]
    k = grid.k[None, :]
    b0, b1 = beta
    lam2 = (b0 * k / eps) ** 2 + (xi + b1 * k / eps) ** 2 + gamma ** 2
    br2 = xi ** 2 + k ** 2 + gamma ** 2
    return lam2 ** (0.5 * r) * br2 ** (0.5 * m)


def singular_norm(grid: Grid2, field: np.ndarray, r: float = 0.0, m: int = 0,
                  gamma: float = 1.0, eps: float = 1.0, beta=(0.0, 0.0),
                  spectral: bool = False) -> float:
    """Weighted ``L^2`` norm of the spectrum, scaled to equal the field norm at ``r = m = 0``.

    Vector fields carry their components on leading axes, which are summed.
    With ``spectral=True`` the input is already a spectrum.
    """
    spec = np.asarray(field) if spectral else transform(grid, field)
    w = singular_weight(grid, r, m, gamma, eps, beta)
    s = np.sum(np.abs(spec * w) ** 2) * grid.dxi * grid.dk
    return float(np.sqrt(s) / (2 * np.pi))


def power_fit(eps, values) -> Tuple[float, float]:
    """Slope and ``r^2`` of ``log(value)`` against ``log(eps)``.

    Nonpositive values are dropped; at least four points must remain.
    """
    eps = np.asarray(eps, dtype=float)
    v = np.asarray(values, dtype=float)
    ok = (v > 0) & np.isfinite(v) & (eps > 0)
    if ok.sum() < 4:
        raise ValueError("power_fit needs at least 4 positive points")
    x, y = np.log(eps[ok]), np.log(v[ok])
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss_res = np.sum((y - pred) ** 2)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), float(r2)


def boundary_contamination(grid: Grid2, field: np.ndarray, inner: float = 0.6,
                           tol: float = 1e-8) -> float:
    """Max ``|field|`` outside the inner ``inner`` fraction of the box, relative to max.

    Logs a warning when above ``tol``.
    """
    X, T = grid.mesh()
    outside = (np.abs(X) > 0.5 * inner * grid.L_x1) | (np.abs(T) > 0.5 * inner * grid.L_theta)
    f = np.abs(np.asarray(field))
    scale = max(f.max(), 1e-300)
    val = float(f[..., outside].max() / scale) if outside.any() else 0.0
    if val > tol:
        log.warning("field reaches %.2e of its peak outside the inner box", val)
    return val


def export_field_csv(grid: Grid2, field: np.ndarray, path) -> None:
    X, T = grid.mesh()
    data = np.column_stack([X.ravel(), T.ravel(), np.asarray(field).ravel()])
    np.savetxt(path, data, delimiter=",", header="x1,theta,value", comments="")


def export_field_binary(grid: Grid2, field: np.ndarray, path) -> None:
    """Header ``(N_x1, N_theta, L_x1, L_theta)`` followed by float64 row-major values."""
    with open(path, "wb") as fh:
        np.array([grid.N_x1, grid.N_theta], dtype=np.int64).tofile(fh)
        np.array([grid.L_x1, grid.L_theta], dtype=np.float64).tofile(fh)
        np.ascontiguousarray(field, dtype=np.float64).tofile(fh)
