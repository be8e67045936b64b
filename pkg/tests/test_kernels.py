import itertools
import logging

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from rayleigh_pulse import profile_rhat, solve_rayleigh, wave_speeds
from rayleigh_pulse.kernels import (CubicCoefficients, ExponentialSum, KernelTable, band_grid,
                                    bound_constant, build_kernel_table, canonical_H,
                                    canonical_fit_check, d_full, d_tensor, elementary_kernel,
                                    factor, fit_canonical, full_kernel, load_table,
                                    material_hash, reduction_residuals, resonance_lambda,
                                    save_table)
from rayleigh_pulse.kernels.canonical import DegenerateSamplingError

# least-squares coefficients on (H1, H2, H3) for SVK at lambda = mu = 1, frozen
# from the canonical fit (independently confirmed by the quadrature kernel)
SVK_FIT = np.array([6.0935, 4.0623, -5.0943])


# ------------------------------------------------------------ exponential sums
def test_expsum_eval_integrate_derivative():
    f = ExponentialSum([2.0, -1.0 + 1j, 0.5], [-1.0, -2.0 + 0.5j, -0.3], [0, 0, 1])
    z = np.linspace(0, 4, 9)
    ref = 2 * np.exp(-z) + (-1 + 1j) * np.exp((-2 + 0.5j) * z) + 0.5 * z * np.exp(-0.3 * z)
    assert np.allclose(f(z), ref, atol=1e-14)
    re = quad(lambda s: f(s).real, 0, np.inf, epsabs=1e-13)[0]
    im = quad(lambda s: f(s).imag, 0, np.inf, epsabs=1e-13)[0]
    assert f.integrate() == pytest.approx(re + 1j * im, abs=1e-10)
    h = 1e-5
    fd = (f(z + h) - f(z - h)) / (2 * h)
    assert np.allclose(f.derivative()(z), fd, atol=1e-8)


@pytest.mark.parametrize("anchor", ["zero", "inf"])
def test_expsum_first_order_solve(anchor):
    f = ExponentialSum([1.0, 2.0 - 1j], [-0.7, -1.9], [0, 1])
    lam = -1.2 + 0.4j
    y = f.solve_first_order(lam, anchor)
    z = np.linspace(0, 5, 11)
    assert np.allclose(y.derivative()(z) - lam * y(z), f(z), atol=1e-13)
    if anchor == "zero":
        assert abs(y(0.0)) < 1e-14


def test_expsum_secular_branch():
    f = ExponentialSum([1.5], [-1.0])
    y = f.solve_first_order(-1.0, "zero")
    z = np.linspace(0, 3, 5)
    assert np.allclose(y(z), 1.5 * z * np.exp(-z))
    with pytest.raises(ValueError):
        f.solve_first_order(-1.0, "inf")


def test_expsum_divergent_integral():
    with pytest.raises(ValueError):
        ExponentialSum([1.0], [0.1]).integrate()


# ------------------------------------------------------------------ oracles
def _factor_oracle(rd, xi, z):
    """``F[alpha, j](z) = (i xi r_alpha, d_z r_alpha)`` from the profile, 4th-order FD in z."""
    h = 1e-3
    r = profile_rhat(rd, xi, z)
    # the profile is an entire function of z, so the stencil may cross z = 0
    rp = [profile_rhat(rd, xi, z + s * h) for s in (-2, -1, 1, 2)]
    d = (rp[0] - 8 * rp[1] + 8 * rp[2] - rp[3]) / (12 * h)
    return np.stack([1j * xi * r, d], axis=-1)


def quad_kernel(d, rd, x1, x2, x3):
    def integrand(z):
        F = [_factor_oracle(rd, x, np.array(z)) for x in (x1, x2, x3)]
        return np.einsum("ijklmn,ij,kl,mn->", d, *F)
    s = min(abs(x1), abs(x2), abs(x3)) * rd.omega1
    zmax = 60.0 / s
    re = quad(lambda z: integrand(z).real, 0, zmax, limit=400, epsabs=1e-14, epsrel=1e-12)[0]
    im = quad(lambda z: integrand(z).imag, 0, zmax, limit=400, epsabs=1e-14, epsrel=1e-12)[0]
    return re + 1j * im


@pytest.mark.parametrize("xi", [0.7, -1.3])
def test_factor_matches_profile(rd11, xi):
    z = np.linspace(0.0, 3.0, 7)
    F = np.stack([_factor_oracle(rd11, xi, np.array([zz]))[0] for zz in z])
    for a, j in itertools.product((1, 2), (1, 2)):
        assert np.allclose(factor(rd11, a, j, xi)(z), F[:, a - 1, j - 1], atol=1e-9)


def test_kernel_matches_quadrature(rd11):
    rng = np.random.default_rng(3)
    cc = CubicCoefficients.svk(wave_speeds(1.0, 1.0))
    d = d_full(cc)
    for _ in range(50):
        x2, x3 = rng.uniform(0.2, 3.0, 2) * rng.choice([-1, 1], 2)
        if abs(x2 + x3) < 0.1:
            continue
        x1 = -(x2 + x3)
        ref = quad_kernel(d, rd11, x1, x2, x3)
        val = full_kernel(cc, rd11, x1, x2, x3)
        assert abs(val - ref) <= 1e-9 * max(abs(ref), 1.0)


def natural_scale(x1, x2, x3):
    """Size of the growth bound ``sqrt(|x1 x2 x3|) sqrt(min |x|)``; cancellation makes
    relative checks against ``|b|`` alone meaningless near its zeros."""
    a = np.abs(np.stack(np.broadcast_arrays(x1, x2, x3)))
    return np.sqrt(a.prod(axis=0)) * np.sqrt(a.min(axis=0))


xis = st.floats(0.01, 100.0).flatmap(lambda a: st.sampled_from([a, -a]))


@given(xis, xis, xis)
def test_kernel_symmetry_conjugation_homogeneity(rd11, x1, x2, x3):
    cc = CubicCoefficients(0.3, 0.2, -0.5, 0.7)
    b = full_kernel(cc, rd11, x1, x2, x3)
    scale = abs(b) + natural_scale(x1, x2, x3)
    for p in itertools.permutations((x1, x2, x3)):
        assert abs(full_kernel(cc, rd11, *p) - b) <= 1e-12 * scale
    assert abs(full_kernel(cc, rd11, -x1, -x2, -x3) - np.conj(b)) <= 1e-12 * scale
    assert abs(full_kernel(cc, rd11, 2.5 * x1, 2.5 * x2, 2.5 * x3) - 6.25 * b) <= 1e-12 * 6.25 * scale


def test_kernel_symmetry_bulk(rd11):
    rng = np.random.default_rng(0)
    xi = rng.uniform(0.01, 10, (1000, 3)) * rng.choice([-1, 1], (1000, 3))
    for kind in range(1, 5):
        b = elementary_kernel(kind, rd11, *xi.T)
        scale = np.abs(b) + natural_scale(*xi.T)
        for p in itertools.permutations(range(3)):
            assert np.all(np.abs(elementary_kernel(kind, rd11, *xi[:, p].T) - b) <= 1e-12 * scale)
        assert np.all(np.abs(elementary_kernel(kind, rd11, *(-xi).T) - np.conj(b)) <= 1e-12 * scale)


def test_kernel_zero_frequency(rd11):
    with pytest.raises(ValueError):
        elementary_kernel(1, rd11, 0.0, 1.0, -1.0)


def test_d_tensor_symmetry():
    for kind in range(1, 5):
        d = d_tensor(kind)
        # pair-block symmetry (alpha j), (beta l), (gamma m)
        for perm in itertools.permutations(range(3)):
            axes = [2 * p + s for p in perm for s in (0, 1)]
            assert np.array_equal(np.transpose(d, axes), d)
    with pytest.raises(ValueError):
        d_tensor(5)


def test_bound_constant_finite_and_stable(rd11):
    cc = CubicCoefficients.svk(wave_speeds(1.0, 1.0))
    c1 = bound_constant(cc, rd11, n=10_000, seed=0)
    c2 = bound_constant(cc, rd11, n=10_000, seed=1)
    assert np.isfinite(c1) and 0 < c1 < 10
    assert abs(c1 - c2) < 0.2 * c1


def test_reductions(rd11):
    red = reduction_residuals(rd11.ratio, n=1000, seed=0)
    assert max(red.values()) <= 1e-12


@given(st.floats(0.05, 0.99), st.floats(0.01, 50.0), st.floats(0.01, 50.0))
def test_reduction_identities_property(r, a, b):
    x = (-(a + b), a, b)
    H = {i: canonical_H(i, r, *x) for i in (1, 3, 4, 5)}
    s = abs(H[1]) + abs(H[3]) + abs(H[5])
    assert abs(H[4] + H[1]) <= 1e-12 * s
    assert abs(H[3] + H[5] - 4 / (1 + r) * H[1]) <= 1e-12 * s


def test_canonical_H_invalid():
    with pytest.raises(ValueError):
        canonical_H(9, 0.5, 1.0, 1.0, -2.0)


def test_canonical_fit_svk(rd11):
    cc = CubicCoefficients.svk(wave_speeds(1.0, 1.0))
    fit = canonical_fit_check(cc, rd11, n=200, seed=0)
    assert fit.residual < 1e-8
    assert np.allclose(fit.coeffs, SVK_FIT, atol=1e-4)


def test_canonical_fit_override(rd11):
    fit = canonical_fit_check(CubicCoefficients(0.3, 0.2, -0.5, 0.7), rd11, n=200, seed=0)
    assert fit.residual < 1e-8


def test_canonical_fit_degenerate(rd11):
    with pytest.raises(DegenerateSamplingError):
        fit_canonical(np.ones(40), np.ones(40), np.ones(40), rd11.ratio)


# -------------------------------------------------------------------- tables
def test_table_values_and_zero_cells(rd11):
    cc = CubicCoefficients.svk(wave_speeds(1.0, 1.0))
    kg = band_grid(0.5, 6)
    tab = build_kernel_table(cc, rd11, kg)
    K1, K2 = np.meshgrid(kg, kg, indexing="ij")
    res = K1 + K2 == 0
    assert np.all(tab.values[res] == 0)
    ref = resonance_lambda(cc, rd11, K1[~res], K2[~res])
    assert np.allclose(tab.values[~res], ref, rtol=1e-13)
    assert tab.prefactor == pytest.approx(-1 / (4 * np.pi * rd11.c0))
    assert np.allclose(tab.values, tab.values.T)


def test_table_cache_roundtrip(tmp_path, rd11, caplog):
    cc = CubicCoefficients.svk(wave_speeds(1.0, 1.0))
    kg = band_grid(0.5, 5)
    tab = build_kernel_table(cc, rd11, kg)
    mh = material_hash(1.0, 1.0, cc.as_array())
    path = tmp_path / "t.rpkt"
    save_table(path, tab, mh)
    back = load_table(path, mh, kg)
    assert isinstance(back, KernelTable)
    assert np.allclose(back.values, tab.values, rtol=1e-6)
    assert np.array_equal(back.values, tab.values.astype(np.complex64).astype(complex))
    assert load_table(path, "other", kg) is None
    assert load_table(path, mh, band_grid(0.25, 5)) is None
    assert load_table(tmp_path / "missing.rpkt") is None
    raw = bytearray(path.read_bytes())
    raw[-3] ^= 0xFF
    path.write_bytes(bytes(raw))
    with caplog.at_level(logging.WARNING):
        assert load_table(path, mh, kg) is None
    assert "rebuilding" in caplog.text


def test_material_hash_distinguishes():
    assert material_hash(1, 1, [0, .5, 1, 0]) != material_hash(1, 1, [0, .5, 1, 0.1])
