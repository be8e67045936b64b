import dataclasses
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from rayleigh_pulse import spectral as sp, wave_speeds
from rayleigh_pulse.corrector import CutoffSpec, ProfileBuilder, sigma_traces
from rayleigh_pulse.harness import (BOUNDARY_GROUPS, INTERIOR_GROUPS, DerivSet, ExponentCheck,
                                    FloorCheck, L_ff, L_fs, L_ss, N_fast, ProfileFields,
                                    ResidualReport, boundary_residual, bundle_from_state,
                                    green_strain, interior_residual, predicted_checks,
                                    svk_elasticity, svk_energy, svk_stress, svk_tensors,
                                    sweep, z_nodes)
from rayleigh_pulse.harness.fields import ALL_KEYS
from rayleigh_pulse.kernels import CubicCoefficients

MC = wave_speeds(1.0, 1.0)
MODEL = svk_tensors(MC)
small_v = arrays(np.float64, (2, 2), elements=st.floats(-0.1, 0.1))


# -------------------------------------------------------------- constitutive
def test_c0_is_lame_form():
    lam, mu = 1.0, 1.0
    d = np.eye(2)
    ref = (lam * np.einsum("aj,bl->ajbl", d, d)
           + mu * (np.einsum("ab,jl->ajbl", d, d) + np.einsum("al,bj->ajbl", d, d)))
    assert np.allclose(MODEL.c0, ref, atol=1e-14)
    gen = svk_tensors(wave_speeds(3.0, 2.0))
    ref2 = (1.5 * np.einsum("aj,bl->ajbl", d, d)
            + (np.einsum("ab,jl->ajbl", d, d) + np.einsum("al,bj->ajbl", d, d)))
    assert np.allclose(gen.c0, ref2, atol=1e-14)


def test_elasticity_pair_symmetry():
    rng = np.random.default_rng(0)
    v = rng.uniform(-0.5, 0.5, (2, 2, 100))
    c = MODEL.elasticity(v)
    assert np.abs(c - np.transpose(c, (2, 3, 0, 1, 4))).max() < 1e-12


def _fd_error(f, df, v, h):
    """Max deviation of central differences of ``f`` from ``df`` (derivative on the last two axes)."""
    err = 0.0
    for a in range(2):
        for j in range(2):
            e = np.zeros((2, 2))
            e[a, j] = h
            fd = (f(v + e) - f(v - e)) / (2 * h)
            err = max(err, np.abs(fd - df(v)[..., a, j]).max())
    return err


@given(small_v)
def test_stress_and_elasticity_are_derivatives(v):
    # W is a quartic polynomial: central differences carry an exact h^2 term
    e_s = [_fd_error(lambda x: svk_energy(1.0, 1.0, x), lambda x: svk_stress(1.0, 1.0, x), v, h)
           for h in (1e-2, 5e-3)]
    e_c = [_fd_error(lambda x: svk_stress(1.0, 1.0, x), lambda x: svk_elasticity(1.0, 1.0, x), v, h)
           for h in (1e-2, 5e-3)]
    for e in (e_s, e_c):
        assert e[0] < 1e-3
        assert e[1] <= e[0] / 3.5 + 1e-12


@given(small_v)
def test_model_polynomial_splits(v):
    assert MODEL.energy(v) == pytest.approx(svk_energy(1.0, 1.0, v), abs=1e-13)
    assert np.allclose(MODEL.stress(v), svk_stress(1.0, 1.0, v), atol=1e-13)
    split = MODEL.c0 + MODEL.L(v) + MODEL.Q(v)
    assert np.abs(split - svk_elasticity(1.0, 1.0, v)).max() < 1e-12
    h = MODEL.h_lin(v) + MODEL.h_quad(v) + MODEL.h_cubic(v)
    assert np.abs(h - MODEL.h(v)).max() < 1e-12


def test_green_strain_rigid_rotation():
    t = 0.3
    Rm = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
    assert np.abs(green_strain(Rm - np.eye(2))).max() < 1e-15
    assert abs(svk_energy(1.0, 1.0, Rm - np.eye(2))) < 1e-15


def test_override_changes_cubic_only():
    cc = CubicCoefficients(0.3, 0.2, -0.5, 0.7)
    m = svk_tensors(MC, cc)
    assert m.overridden and np.array_equal(m.c0, MODEL.c0) and np.array_equal(m.e, MODEL.e)
    assert not np.allclose(m.d, MODEL.d)
    assert not svk_tensors(MC, CubicCoefficients.svk(MC)).overridden


# ----------------------------------------------------------------- operators
def _modal_derivs(md, rd, family, k=1.0):
    """Real ``u = Re(exp(i k (theta + omega z)) r)`` on a (theta, z) grid, fast keys only."""
    th = np.linspace(0, 2 * np.pi, 16)[None, :]
    z = np.linspace(0, 2.0, 5)[:, None]
    om, r = md.omega[family], md.r_vec[family]
    base = np.exp(1j * k * (th + om * z))[None] * r[:, None, None]
    data = {}
    for key in ALL_KEYS:
        nt, n1, n2, nth, nz = key
        if nt or n1 or n2:
            data[key] = np.zeros(base.shape)
            continue
        data[key] = np.real((1j * k) ** nth * (1j * k * om) ** nz * base)
    return DerivSet(data, rd.c_R)


@pytest.mark.parametrize("family", [0, 1])
def test_L_ff_annihilates_modes(md11, rd11, family):
    ds = _modal_derivs(md11, rd11, family)
    ref = np.abs(ds[(0, 0, 0, 2, 0)]).max()
    assert np.abs(L_ff(ds, MODEL)).max() <= 1e-12 * ref


def test_L_ss_matrix_form():
    rng = np.random.default_rng(1)
    H = rng.normal(size=(2, 2, 2))
    H = 0.5 * (H + np.transpose(H, (0, 2, 1)))           # H[b, j, l] = d_j d_l u_b
    utt = rng.normal(size=2)
    data = {key: np.zeros(2) for key in ALL_KEYS}
    data[(2, 0, 0, 0, 0)] = utt
    data[(0, 2, 0, 0, 0)] = H[:, 0, 0]
    data[(0, 1, 1, 0, 0)] = H[:, 0, 1]
    data[(0, 0, 2, 0, 0)] = H[:, 1, 1]
    out = L_ss(DerivSet(data, 1.0), MODEL)
    r = MC.r
    M11 = np.array([[r, 0.0], [0.0, 1.0]])
    M12 = np.array([[0.0, r - 1.0], [r - 1.0, 0.0]])
    M22 = np.array([[1.0, 0.0], [0.0, r]])
    ref = utt - (M11 @ H[:, 0, 0] + M12 @ H[:, 0, 1] + M22 @ H[:, 1, 1])
    assert np.allclose(out, ref, atol=1e-14)


def test_N_single_mode_support_and_grid(small_bundle):
    b = small_bundle
    g = b.grid
    X, T = g.mesh()
    w = sp.dealias(g, sp.transform(g, np.exp(-X ** 2 / 4) * np.cos(T)))
    sig = sigma_traces(g, [w, 0 * w, 0 * w, 0 * w], b.pb.band)
    cp = b.pb.build(sig)
    pf = ProfileFields(b.pb, sig, cp, 2.0 ** -6)
    N = N_fast(pf.derivs("sigma", 0.5), MODEL)
    Nm = np.abs(sp.theta_transform(g, N)).max(axis=(0, 1))
    n1 = int(round(1 / g.dk))
    big = np.abs(g.n_k[Nm > 1e-10 * Nm.max()])
    assert set(big) <= {0, 2 * n1}
    # the band convolution in the corrector forcing reproduces the grid product at k = 2
    t = pf.derivs("tau", 0.5)
    lhs = sp.theta_transform(g, L_ff(t, MODEL))
    rhs = -sp.theta_transform(g, L_fs(pf.derivs("sigma", 0.5), MODEL) + N)
    i2 = np.nonzero(g.n_k == 2 * n1)[0][0]
    assert np.abs(lhs[..., i2] - rhs[..., i2]).max() <= 1e-8 * np.abs(rhs[..., i2]).max()


# ----------------------------------------------------------------- residuals
@pytest.fixture(scope="module")
def groups(small_bundle):
    pf = ProfileFields(small_bundle.pb, small_bundle.sig, small_bundle.cp, 2.0 ** -5, CutoffSpec(0.4))
    return pf, interior_residual(pf, small_bundle.model, 0.7), boundary_residual(pf, small_bundle.model,
                                                                                   small_bundle.G)


def test_residual_identities(groups):
    _, I, B = groups
    assert np.abs(I["identity"]).max() <= 1e-10 * np.abs(I["total"]).max()
    assert np.abs(B["identity"]).max() <= 1e-10 * max(np.abs(B["total"]).max(), 1e-300)
    assert np.abs(I["L_ff_sigma"]).max() <= 1e-9
    assert np.abs(B["ell_f_sigma"]).max() <= 1e-9
    for name in INTERIOR_GROUPS + ("F_a", "total"):
        assert np.isrealobj(I[name]) and np.all(np.isfinite(I[name]))
    for name in BOUNDARY_GROUPS + ("h_a", "total"):
        assert np.isrealobj(B[name]) and np.all(np.isfinite(B[name]))


def test_residual_zero_data(mc11, small_grid):
    b = bundle_from_state(mc11, small_grid, np.zeros(small_grid.shape, complex), 0.0)
    pf = ProfileFields(b.pb, b.sig, b.cp, 2.0 ** -4, CutoffSpec(0.4))
    B = boundary_residual(pf, b.model, None)
    I = interior_residual(pf, b.model, 0.3)
    assert np.all(B["h_a"] == 0) and np.all(B["total"] == 0)
    assert np.all(I["F_a"] == 0)


def test_residual_bookkeeping_linear_sigma_only(small_bundle):
    """No corrector and no nonlinearity: ``F_a = L_ss(eps^2 u_sigma) + cutoff group``."""
    b = small_bundle
    lin = dataclasses.replace(b.model, d=np.zeros_like(b.model.d), e=np.zeros_like(b.model.e))
    pb0 = ProfileBuilder(b.grid, b.md, b.rd, lin.d)
    zero = {f.name: np.zeros_like(getattr(b.cp, f.name)) for f in dataclasses.fields(b.cp)
            if isinstance(getattr(b.cp, f.name), np.ndarray)}
    cp0 = dataclasses.replace(b.cp, **zero)
    eps = 2.0 ** -5
    pf = ProfileFields(pb0, b.sig, cp0, eps, CutoffSpec(0.4))
    I = interior_residual(pf, lin, 0.7)
    for name in ("L_fs_tau", "Q", "L_minus_N"):
        assert np.abs(I[name]).max() <= 1e-14 * np.abs(I["F_a"]).max()
    assert np.allclose(I["F_a"], I["L_ss"] + I["cutoff"], atol=1e-14 * np.abs(I["F_a"]).max())


def test_z_nodes_integrate_exponentials():
    for eps in (2.0 ** -3, 2.0 ** -6):
        z, w = z_nodes(eps)
        for rate in (0.3, 1.0, 5.0):
            # psi^2 support ends at x2 = 1, i.e. z = 1/eps
            ref = (1 - np.exp(-rate / eps)) / rate
            assert np.sum(w * np.exp(-rate * z)) == pytest.approx(ref, rel=1e-8)


# -------------------------------------------------------------------- report
def test_predicted_exponents():
    ex, fl = predicted_checks(0.4)
    by = {c.name: c.predicted for c in ex}
    assert by["boundary.cutoff.r1.m0"] == pytest.approx(1.4)
    assert by["interior.F_a.dx1_L2.r0.5.m0"] == pytest.approx(0.3)
    assert by["tau.dx1.sup.r0.m0"] == pytest.approx(-0.8)
    assert all(c.tol == 0.15 for c in ex)
    assert {f.name for f in fl} >= {"interior.identity.max", "boundary.identity.max"}


def test_exponent_and_floor_checks():
    c = ExponentCheck("x", 2.0, 0.15, exponent=2.1, r2=0.999)
    assert c.passed and c.margin == pytest.approx(0.05)
    assert not ExponentCheck("x", 2.0, 0.15, exponent=2.2, r2=0.999).passed
    assert not ExponentCheck("x", 2.0, 0.15, exponent=2.0, r2=0.5).passed
    assert FloorCheck("f", 1e-9, 1e-12).passed and not FloorCheck("f", 1e-9, float("nan")).passed


def _synthetic_report():
    rep = ResidualReport()
    rep.exponents = [ExponentCheck("a", 2.0), ExponentCheck("b", -0.8)]
    rep.floors = [FloorCheck("fl", 1e-9)]
    rng = np.random.default_rng(2)
    for e in 2.0 ** -np.arange(3, 9):
        rep.add(e, "a", 3 * e ** 2)
        rep.add(e, "b", e ** -0.8 * (1 + 1e-3 * rng.normal()))
        rep.add(e, "fl", 1e-13)
    rep.meta = {"b_exp": 0.4}
    return rep.evaluate()


def test_report_roundtrip(tmp_path):
    rep = _synthetic_report()
    assert rep.passed
    assert rep.exponents[0].exponent == pytest.approx(2.0, abs=1e-12)
    rep.write_csv(tmp_path / "r.csv")
    rep.write_json(tmp_path / "r.json")
    back = ResidualReport.load(tmp_path / "r.csv", tmp_path / "r.json")
    assert back.rows == sorted(rep.rows, key=lambda r: (r["name"], r["eps"]))
    assert [c.exponent for c in back.exponents] == [c.exponent for c in rep.exponents]
    summ = json.loads((tmp_path / "r.json").read_text())
    assert summ["passed"] is True and len(summ["exponents"]) == 2


def test_report_failure_and_nan(tmp_path):
    rep = ResidualReport()
    rep.exponents = [ExponentCheck("a", 1.0)]
    rep.add(0.1, "a", 1.0)
    rep.evaluate()
    assert not rep.passed and "4" in rep.exponents[0].note
    rep.write_json(tmp_path / "r.json")
    assert json.loads((tmp_path / "r.json").read_text())["exponents"][0]["exponent"] is None


def test_report_plots(tmp_path):
    rep = _synthetic_report()
    rep.write_gnuplot(tmp_path / "r.gp")
    txt = (tmp_path / "r.gp").read_text()
    assert "set logscale xy" in txt and txt.count("plot ") == 2
    pngs = rep.write_png(tmp_path)
    assert len(pngs) == 2
    assert all(p.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n" for p in pngs)


def test_small_sweep_isolates_and_reports(small_bundle):
    eps = [2.0 ** -3, 2.0 ** -4, 2.0 ** -5, 2.0 ** -6]
    rep = sweep(small_bundle, eps, r_menu=(0.0, 1.0), m_menu=(0,), order=4)
    assert not rep.failures
    assert all(f.passed for f in rep.floors), [(f.name, f.worst) for f in rep.floors]
    assert {r["eps"] for r in rep.rows} == set(eps)
    names = rep.names()
    assert "boundary.h_a.r0.m0" in names and "interior.F_a.L2.r0.m0" in names
