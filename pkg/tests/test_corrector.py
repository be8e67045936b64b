import numpy as np
import pytest
from hypothesis import given, strategies as st

from rayleigh_pulse import spectral as sp
from rayleigh_pulse.corrector import (CutoffSpec, SupportError, apply_cutoff, band_of,
                                      cokernel_fredholm_ratio, fredholm_normalized, psi,
                                      sigma_traces, smoothstep, tau_scaling_fit, tau_sup)
from rayleigh_pulse.harness import L_ff, L_fs, N_fast, ProfileFields, bundle_from_state
from rayleigh_pulse.kernels import ExponentialSum


# ------------------------------------------------------------------- cutoffs
@given(st.floats(-3.0, 3.0))
def test_chi_even_and_plateaus(s):
    c = CutoffSpec.chi
    assert c(s) == c(-s)
    if abs(s) <= 0.5:
        assert c(s) == 0.0
    if abs(s) >= 1.0:
        assert c(s) == 1.0


def test_chi_monotone_and_smooth():
    s = np.linspace(0.5, 1.0, 2001)
    assert np.all(np.diff(CutoffSpec.chi(s)) >= 0)
    t = np.linspace(-0.2, 1.2, 1401)
    t = t[(np.abs(t) > 1e-4) & (np.abs(t - 1) > 1e-4)]     # third derivative jumps at the ends
    h = 1e-6
    for d in range(3):
        fd = (smoothstep(t + h, d) - smoothstep(t - h, d)) / (2 * h)
        assert np.allclose(fd, smoothstep(t, d + 1), atol=1e-4)
    with pytest.raises(ValueError):
        smoothstep(t, 4)
    with pytest.raises(ValueError):
        CutoffSpec(b_exp=0.0)


def test_psi_support():
    x = np.linspace(0, 2, 401)
    p = psi(x)
    assert np.all(p[x <= 0.5] == 1.0) and np.all(p[x >= 1.0] == 0.0)
    h = 1e-6
    assert np.allclose((psi(x + h) - psi(x - h)) / (2 * h), psi(x, 1), atol=1e-5)


def test_apply_cutoff(small_bundle):
    pb = small_bundle.pb
    spec = CutoffSpec(0.4)
    eps = 2.0 ** -4
    p = spec.p(eps)
    vals = np.ones((3, pb.band.M), dtype=complex)
    out = apply_cutoff(pb, vals, spec, eps)
    k = np.abs(pb.band.k)
    assert np.all(out[:, k >= p] == 1.0)
    assert np.all(out[:, k <= p / 2] == 0.0)
    assert np.array_equal(out[:, ::-1], out)                   # even in k


def test_cutoff_keeps_reality(small_bundle):
    b = small_bundle
    pf = ProfileFields(b.pb, b.sig, b.cp, 2.0 ** -4, CutoffSpec(0.4))
    band = pf.tau_band(0.3, (0, 0, 0, 0, 0))
    f = sp.theta_inverse(b.grid, _unband(b.grid, band), real=False)
    assert np.abs(f.imag).max() <= 1e-12 * np.abs(f.real).max()


def _unband(grid, vals):
    out = np.zeros(vals.shape[:-1] + (grid.N_theta,), dtype=complex)
    out[..., sp.band_indices(grid)] = vals
    return out


# -------------------------------------------------------------- sigma traces
def test_sigma_zero_and_support(small_bundle):
    b = small_bundle
    g, band = b.grid, b.pb.band
    z = np.zeros(g.shape, complex)
    sig0 = sigma_traces(g, [z, z], band)
    assert np.all(sig0.X == 0)
    sh = b.sig.sigma_hat(0)
    assert np.all(sh[:2][..., band.k < 0] == 0)
    assert np.all(sh[2:][..., band.k > 0] == 0)
    bad = z.copy()
    bad[3, 0] = 1.0
    with pytest.raises(SupportError):
        sigma_traces(g, [bad, z], band)


def test_sigma_trace_relation(small_bundle):
    b = small_bundle
    band, md = b.pb.band, b.md
    W = b.sig.w_jets[0]
    pos = band.k > 0
    sh = b.sig.sigma_hat(0)
    assert np.allclose(sh[0][:, pos], -2j * W[:, pos] * md.omega[1], atol=1e-15)
    assert np.allclose(sh[1][:, pos], 2j * W[:, pos] * md.q, atol=1e-15)
    # mirror channels: sigma_3(k) = conj sigma_1(-k) in the mixed x1 picture
    K = band.K
    assert np.allclose(sh[2][:, :K], np.conj(sh[0][:, K + 1:][:, ::-1]), atol=1e-15)
    assert np.allclose(sh[3][:, :K], np.conj(sh[1][:, K + 1:][:, ::-1]), atol=1e-15)


def test_sigma_boundary_condition(small_bundle):
    b = small_bundle
    band, r = b.pb.band, b.md.r
    X = b.sig.X[0]
    u = np.einsum("axm,amc->cxm", X, band.rv)
    uz = np.einsum("axm,am,amc->cxm", X, band.lam, band.rv)
    ik = 1j * band.k
    res = np.stack([ik * u[1] + uz[0], ik * (r - 2) * u[0] + r * uz[1]])
    assert np.abs(res).max() <= 1e-10 * np.abs(u).max()


def test_u_sigma_real_and_decaying(small_bundle):
    b = small_bundle
    g = b.grid
    pf = ProfileFields(b.pb, b.sig, b.cp, 2.0 ** -6)
    v0 = sp.theta_inverse(g, _unband(g, pf.sigma_band(0.0, (0, 0, 0, 0, 0))), real=False)
    assert np.abs(v0.imag).max() <= 1e-12 * np.abs(v0.real).max()
    # z = 0 reduces to the sum of traces times mode vectors
    direct = np.einsum("axm,amc->cxm", b.sig.X[0], b.pb.band.rv)
    assert np.allclose(pf.sigma_band(0.0, (0, 0, 0, 0, 0)), direct, atol=1e-15)


def test_u_sigma_single_mode_decay(small_bundle):
    b = small_bundle
    g = b.grid
    X, T = g.mesh()
    w = sp.dealias(g, sp.transform(g, np.exp(-X ** 2 / 4) * np.cos(T)))
    sig = sigma_traces(g, [w, 0 * w], b.pb.band)
    om1 = b.rd.omega1
    u0 = np.abs(b.pb.sigma_eval(sig, 0.0, 0, 0)).max()
    u1 = np.abs(b.pb.sigma_eval(sig, 10.0 / om1, 0, 0)).max()
    assert u1 < np.exp(-8) * u0


def test_L_ff_annihilates_u_sigma(small_bundle):
    b = small_bundle
    pf = ProfileFields(b.pb, b.sig, b.cp, 2.0 ** -6)
    for z in (0.0, 0.4, 2.0):
        ds = pf.derivs("sigma", z)
        ref = np.abs(ds[(0, 0, 0, 2, 0)]).max()
        assert np.abs(L_ff(ds, b.model)).max() <= 1e-9 * ref


# ------------------------------------------------------ forcing and corrector
def test_forcing_matches_grid_oracle(small_bundle):
    """``L_ff u_tau = -(L_fs u_sigma + N(u_sigma))`` with ``N`` formed by physical products."""
    b = small_bundle
    g = b.grid
    pf = ProfileFields(b.pb, b.sig, b.cp, 2.0 ** -8)
    for z in (0.0, 0.3, 1.5):
        s = pf.derivs("sigma", z)
        t = pf.derivs("tau", z)
        lhs = L_ff(t, b.model)
        rhs = -(L_fs(s, b.model) + N_fast(s, b.model))
        # the corrector lives on the band away from k = 0: project the grid products there
        nz = g.n_k[sp.band_indices(g)] != 0
        proj = lambda f: sp.theta_transform(g, f)[..., sp.band_indices(g)][..., nz]
        diff = np.abs(proj(lhs) - proj(rhs)).max()
        assert diff <= 1e-8 * np.abs(proj(rhs)).max()


def test_forcing_zero_for_zero_w(small_bundle):
    b = small_bundle
    g = b.grid
    z = np.zeros(g.shape, complex)
    sig = sigma_traces(g, [z, z, z], b.pb.band)
    cp = b.pb.build(sig)
    for arr in (cp.fL, cp.fX, cp.A0, cp.N0, cp.tau_star, cp.fredholm):
        assert np.all(arr == 0)


def test_channel_ode_identity(small_bundle):
    b = small_bundle
    pb, band = b.pb, b.pb.band
    zs = np.linspace(0.0, 6.0, 25)
    for p in (band.K + 1, band.K + 3, band.K - 2):
        for ix in (10, 16):
            f = pb.channel_forcing_expsum(b.sig, b.cp, ix, p)
            taus = pb.tau_channels_expsum(b.sig, b.cp, ix, p)
            for j, tj in enumerate(taus):
                Fj = f.dot(band.ell_ch[j, p])
                res = tj.derivative()(zs) - band.lam_ch[j, p] * tj(zs) - Fj(zs)
                assert np.abs(res).max() <= 1e-12 * max(np.abs(Fj(zs)).max(), 1e-300) + 1e-300
                # decaying or bounded terms only
                assert np.all(np.real(tj.rates) <= 1e-12)


def test_dual_route_matches_slots(small_bundle):
    b = small_bundle
    pb, band = b.pb, b.pb.band
    zs = np.array([0.0, 0.3, 1.0, 4.0])
    A, _, N = pb.tau_slots(b.sig, b.cp, zs, 0, dmax=0)
    for p in (band.K + 1, band.K + 5, band.K - 3):
        ix = 16
        taus = pb.tau_channels_expsum(b.sig, b.cp, ix, p)
        R = b.md.R_vec(band.k[p])
        u = sum(t(zs)[:, None] * R[:2, j] for j, t in enumerate(taus))
        ua = (A[:, 0] + N[:, 0])[:, :, ix, p]
        assert np.abs(u - ua).max() <= 1e-10 * np.abs(ua).max()


def test_secular_branch_magnitude():
    for lam in (-0.7 + 1.3j, -2.0 - 0.5j):
        y = ExponentialSum([1.0], [lam]).solve_first_order(lam, "zero")
        z = np.linspace(0, 20 / abs(lam.real), 200001)
        assert np.abs(y(z)).max() == pytest.approx(1 / (np.e * abs(lam.real)), rel=1e-6)


# ---------------------------------------------------------- boundary solve
def test_boundary_least_squares_identities(small_bundle):
    band = small_bundle.pb.band
    rng = np.random.default_rng(0)
    for p in np.nonzero(band.nz)[0]:
        t = rng.normal(size=2) + 1j * rng.normal(size=2)
        rhs = band.Bk[p] @ t
        assert abs(band.coker[p] @ rhs) <= 1e-13 * np.linalg.norm(rhs)
        back = band.Bk[p] @ (band.Bk_pinv[p] @ rhs)
        assert np.allclose(back, rhs, atol=1e-12 * np.linalg.norm(rhs))
    assert small_bundle.cp.range_residual <= 1e-12


def test_fredholm_small_for_solved_w(small_bundle):
    cp = small_bundle.cp
    assert fredholm_normalized(small_bundle.grid, cp) < 1e-6
    assert np.max(cp.coker_residual) < 1e-6
    # without the x1 projection the residual sees modes the solver never evolves
    assert fredholm_normalized(small_bundle.grid, cp, projected=False) > 1e-6


def _off_equation_jets(g, n=4, scale=1.0):
    X, T = g.mesh()
    return [scale * sp.dealias(g, sp.transform(g, np.exp(-X ** 2 / 4 - T ** 2 / 9) * np.cos((i + 1) * T + i)))
            for i in range(n)]


def test_coker_proportional_to_fredholm(small_bundle):
    b = small_bundle
    g = b.grid
    jets = _off_equation_jets(g)
    sig = sigma_traces(g, jets, b.pb.band)
    cp = b.pb.build(sig)
    assert fredholm_normalized(g, cp) > 1e-3               # genuinely off the equation
    ratio, spread = cokernel_fredholm_ratio(b.pb, cp)
    assert np.isfinite(ratio) and spread < 1e-10


def test_fredholm_linear_in_perturbation(small_bundle):
    from rayleigh_pulse import amplitude as am
    b = small_bundle
    g = b.grid
    what = b.trajectory.final.what
    op = am.BilinearOperator(g, b.table)
    jets = am.time_jets(what, g, op, b.rd, order=3)
    k0 = int(np.argmin(np.abs(g.k - 1.0)))
    e = np.zeros(g.shape, complex)
    e[:, k0] = np.exp(-g.xi1 ** 2)
    e = sp.dealias(g, sp.enforce_hermitian(g, e))

    def R(d):
        # perturb w only, keeping its time derivatives: the jets leave the equation
        cp = b.pb.build(sigma_traces(g, [what + d * e] + jets[1:], b.pb.band))
        return cp.fredholm

    R0 = R(0.0)
    d = 1e-4
    d1, d2 = R(d) - R0, R(2 * d) - R0
    pk = b.pb.band.K + int(round(g.k[k0] / g.dk))
    assert np.abs(d1[:, pk]).max() > 1e-3 * d
    assert np.abs(d2 - 2 * d1).max() <= 1e-3 * np.abs(d1).max()


# ------------------------------------------------------------ small k scaling
def test_tau_scaling_fit_synthetic():
    k = np.linspace(0.01, 0.2, 12)
    s, r2 = tau_scaling_fit(k, 3.0 * k ** -2.0)
    assert s == pytest.approx(-2.0, abs=1e-12)
    with pytest.raises(ValueError):
        tau_scaling_fit(np.array([0.5, 0.6, 0.7, 0.8]), np.ones(4))


def test_tau_sup_resolution_stable(mc11):
    from rayleigh_pulse import amplitude as am
    from rayleigh_pulse.harness import ForceSpec, build_bundle
    exps = []
    for L, n in ((2 * np.pi * 32, 128), (2 * np.pi * 64, 256)):
        g = sp.Grid2(32.0, 16, L, n)
        b = build_bundle(mc11, g, am.SolverConfig(dt=0.05, T=0.5), ForceSpec(sigma_theta=3.0))
        sup = tau_sup(b.pb, b.sig, b.cp)
        exps.append(tau_scaling_fit(b.pb.band.k, sup, (0.0, 0.2))[0])
    assert abs(exps[0] - exps[1]) < 0.05, exps


def test_u_a_scales_like_eps_squared(small_bundle):
    b = small_bundle
    eps = 2.0 ** -np.arange(10, 14)
    key = (0, 0, 0, 0, 0)
    vals = [np.abs(ProfileFields(b.pb, b.sig, b.cp, e).u_a(0.2, keys=[key])[2][key]).max() for e in eps]
    s, _ = sp.power_fit(eps, vals)
    assert s == pytest.approx(2.0, abs=0.01)
    with pytest.raises(ValueError):
        ProfileFields(b.pb, b.sig, b.cp, 0.0)


def test_bundle_from_state_zero(mc11, small_grid):
    b = bundle_from_state(mc11, small_grid, np.zeros(small_grid.shape, complex), 0.0)
    assert np.all(b.cp.fredholm == 0) and np.all(b.sig.X == 0)
