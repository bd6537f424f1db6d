import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liouville_max.errors import RequiresCompactSupport
from liouville_max.geometry import (BoundaryCurve, DoublyConnectedDomain, build_conformal_map,
                                    free_boundary)
from liouville_max.inner_linear import (CylinderField, classify, cylinder_operator,
                                        fundamental_set, ground_state, mode_grid, potential,
                                        sl_spectrum, solve_cylinder, solve_mode, weighted_norm)


def closed_form_factors(w, x):
    """Bounded factors of the fundamental solutions, written from the Legendre form.

    For ``L_ω = ∂² + 2 sech² - ω²`` the solutions are ``e^{±ωη}(ω ∓ tanh η)`` up to
    normalisation; the small branch uses the regular combination
    ``l = 2 cosh ωη - 2 tanh η sinh(ωη)/ω``.
    """
    th = np.tanh(x)
    if w > 0.05:
        return (w - th) / (1 + w), (w + th) / (1 + w), None, 2 * w * (w - 1) / (w + 1)
    l = 2 * np.cosh(w * x) - 2 * th * (np.sinh(w * x) / w if w > 0 else x)
    return 2 * (w - th), -2 * (w + th), l, 4 * (1 - w * w)


def bump(x, c=0.7):
    u = x - c
    E = np.exp(-u * u)
    p = 1 + 0.3 * x
    b = E * p
    bdd = E * (-1.2 * u - 2 * p + 4 * u * u * p)
    return b, bdd


def test_potential_is_bubble_exponential():
    x = np.linspace(-5, 5, 11)
    assert np.allclose(potential(x), 2 / np.cosh(x) ** 2, rtol=1e-14)


def test_ground_state():
    nu0, eta, z, nu1 = ground_state()
    assert abs(nu0 + 1) < 1e-4
    assert np.max(np.abs(z - np.sqrt(2) / np.cosh(eta))) < 1e-4
    assert nu1 >= 0


@pytest.mark.parametrize("w", [0.0, 5e-4, 0.02, 0.1, 0.5, 2.0, 10.0])
def test_fundamental_set_closed_form(w):
    fs = fundamental_set(w)
    pp, pm, l, W = closed_form_factors(w, fs.eta)
    assert np.max(np.abs(fs.phi_plus - pp)) < 1e-10
    assert np.max(np.abs(fs.phi_minus - pm)) < 1e-10
    if l is not None:
        assert fs.branch == "small"
        assert np.max(np.abs(fs.l - l)) / np.max(np.abs(l)) < 1e-9
    assert abs(fs.wronskian - W) < 1e-9 * max(1.0, abs(W))
    assert fs.residual < 1e-8
    assert fs.wronskian_drift < 1e-8


def test_omega_zero_limits():
    fs = fundamental_set(0.0)
    x = fs.eta
    # k⁺₀ is U' = -2 tanh, the regular solution is ηU' + 2, which equals 2 at η = 0
    assert np.max(np.abs(fs.k_plus + 2 * np.tanh(x))) < 1e-10
    assert np.max(np.abs(fs.l - (2 - 2 * x * np.tanh(x)))) < 1e-9


@pytest.mark.parametrize("w", [10.0, 50.0, 100.0])
def test_large_omega_wronskian(w):
    fs = fundamental_set(w)
    assert abs(fs.wronskian - 2 * w) < 5
    assert fs.residual < 1e-8
    assert np.all(np.isfinite(fs.phi_plus)) and np.all(np.isfinite(fs.phi_minus))


@pytest.mark.parametrize("w", [0.0, 5e-4, 0.03, 0.1, 0.2, 0.32, 0.6, 1.5, 3.0, 10.0])
def test_solve_mode_recovers_bump(w):
    fs = fundamental_set(w)
    b, bdd = bump(fs.eta)
    g = bdd + (potential(fs.eta) - w * w) * b
    r = solve_mode(w, g, 0.3, fs=fs)
    assert r.report["case"] == classify(w, 0.3, 0.05)
    assert not r.report["projected"]
    assert np.max(np.abs(r.phi - b)) < 1e-8
    assert r.report["residual"] < 1e-8


def test_solve_mode_zero():
    r = solve_mode(0.4, np.zeros(mode_grid(0.4).x.size), 0.3)
    assert np.max(np.abs(r.phi)) == 0.0


def test_resonant_band_needs_compact_support():
    fs = fundamental_set(0.31)
    g = np.exp(-0.35 * np.abs(fs.eta))
    with pytest.raises(RequiresCompactSupport):
        solve_mode(0.31, g, 0.3, fs=fs)


def test_projection_flagged_when_not_orthogonal():
    fs = fundamental_set(0.0)
    g = np.exp(-fs.eta ** 2) * fs.eta * (1 - fs.eta ** 2)
    r = solve_mode(0.0, g, 0.3, fs=fs)
    assert r.report["projected"]
    assert r.report["residual"] < 1e-8
    assert abs(r.phi[0]) < 1e-10 and abs(r.phi[-1]) < 1e-10


def test_norm_ratio_tracks_bound():
    # away from ω = θ and from the bound state at ω = 1
    ratios = []
    for w in [0.4, 0.6, 1.5, 2.0, 3.0, 5.0, 10.0, 20.0]:
        fs = fundamental_set(w)
        g = np.exp(-fs.eta ** 2) * (1 + 0.5 * fs.eta)
        rep = solve_mode(w, g, 0.3, fs=fs).report
        ratios.append(rep["norm_ratio"] / rep["bound_scale"])
    assert max(ratios) / min(ratios) < 10


def test_case_iv_weaker_weight():
    # ω = 0 with a slowly decaying source: the solution is controlled at every θ' < θ
    theta = 0.3
    fs = fundamental_set(0.0)
    x = fs.eta
    g = x * np.exp(-0.33 * np.abs(x))
    r = solve_mode(0.0, g, theta, fs=fs)
    ng = weighted_norm(fs.grid, r.g_effective, theta)
    for tp in (0.05, 0.1, 0.2):
        nphi = weighted_norm(fs.grid, r.phi, tp)
        assert np.isfinite(nphi)
        assert nphi * (theta - tp) ** 2 / ng < 10


@settings(max_examples=12, deadline=None)
@given(w=st.floats(1.1, 12.0), shift=st.floats(-2.0, 2.0))
def test_solve_mode_residual_property(w, shift):
    fs = fundamental_set(w)
    b, bdd = bump(fs.eta, shift)
    r = solve_mode(w, bdd + (potential(fs.eta) - w * w) * b, 0.3, fs=fs)
    assert r.report["residual"] < 1e-8
    assert np.max(np.abs(r.phi - b)) < 1e-8


# Sturm-Liouville spectrum ----------------------------------------------------

@pytest.fixture(scope="module")
def concentric_spectrum(concentric_fb):
    return sl_spectrum(concentric_fb, 7.3, kmax=20)


@pytest.fixture(scope="module")
def offset_spectrum():
    cm = build_conformal_map(DoublyConnectedDomain(BoundaryCurve.circle(0, 2.0),
                                                   BoundaryCurve.circle(0.6, 0.4)))
    return sl_spectrum(free_boundary(cm), 7.3)


def test_concentric_spectrum_exact(concentric_spectrum):
    sp = concentric_spectrum
    assert np.max(np.abs(sp.omegas - sp.freq_index / 7.3)) < 1e-10
    assert sp.omegas[0] == 0.0
    y0 = sp.eigenfunctions[:, 0]
    assert np.max(np.abs(y0 - y0.mean())) < 1e-12
    assert np.all(np.diff(sp.omegas) >= -1e-14)
    assert np.max(np.abs(np.diag(sp.l2_gram()) - 1)) < 1e-12


def test_weighted_orthogonality(offset_spectrum):
    G = offset_spectrum.weighted_gram()
    assert np.max(np.abs(G - np.diag(np.diag(G)))) / np.max(np.diag(G)) < 1e-10


def test_weyl_rate(offset_spectrum):
    sp = offset_spectrum
    k = sp.freq_index
    sel = (k >= 4) & (k <= 40)
    rel = np.abs(sp.omegas[sel] - sp.weyl()[sel]) / sp.weyl()[sel]
    slope = np.polyfit(np.log(k[sel]), np.log(rel), 1)[0]
    assert -slope >= 1.8
    # doubled multiplicity of the circle persists for the symmetric offset
    pairs = sp.omegas[1:].reshape(-1, 2) if sp.omegas.size % 2 else sp.omegas[1:-1].reshape(-1, 2)
    hi = pairs[4:40]
    assert np.max(np.abs(hi[:, 1] - hi[:, 0]) / hi[:, 0]) < 1e-6


def test_eigen_relation(offset_spectrum):
    sp = offset_spectrum
    Y = sp.eigenfunctions[:, :30]
    r = sp.apply_p_dxi2(Y) + (sp.omegas[:30] ** 2)[None, :] * Y
    assert np.max(np.abs(r)) < 1e-10


def test_kmax_validation(concentric_fb):
    with pytest.raises(ValueError):
        sl_spectrum(concentric_fb, 7.3, kmax=0)


# cylinder solver -------------------------------------------------------------

@pytest.fixture(scope="module")
def cylinder_problem():
    cm = build_conformal_map(DoublyConnectedDomain(BoundaryCurve.circle(0, 2.0),
                                                   BoundaryCurve.circle(0.3, 0.5)))
    sp = sl_spectrum(free_boundary(cm, n=25), 7.3)
    grid = mode_grid(sp.omegas.max())
    TH, X = sp.theta[:, None], grid.x[None, :]
    phi = np.exp(-(X - 0.3) ** 2) * (1 + 0.3 * np.cos(TH) + 0.2 * np.sin(2 * TH) * X)
    g = cylinder_operator(phi, sp, grid)
    out, rep = solve_cylinder(CylinderField(g, grid, 0.3), 0.3, sp)
    return sp, grid, phi, g, out, rep


def test_cylinder_manufactured(cylinder_problem):
    sp, grid, phi, g, out, rep = cylinder_problem
    assert np.max(np.abs(out.values - phi)) < 1e-7
    res = CylinderField(cylinder_operator(out.values, sp, grid) - g, grid)
    assert res.weighted_norm(sp) / CylinderField(g, grid).weighted_norm(sp) < 1e-7
    assert {r["case"] for r in rep} >= {"i", "ii", "iv"}


def test_cylinder_zero(cylinder_problem):
    sp, grid = cylinder_problem[:2]
    out, _ = solve_cylinder(CylinderField(np.zeros((sp.n, grid.x.size)), grid), 0.3, sp)
    assert np.max(np.abs(out.values)) == 0.0


def _cheb(n, T):
    # Chebyshev points and differentiation matrix on [-T, T]
    x = np.cos(np.pi * np.arange(n + 1) / n)
    c = np.r_[2.0, np.ones(n - 1), 2.0] * (-1.0) ** np.arange(n + 1)
    X = x[:, None] - x[None, :]
    D = np.outer(c, 1 / c) / (X + np.eye(n + 1))
    D -= np.diag(D.sum(axis=1))
    return T * x, D / T


def test_cylinder_matches_direct_solve(cylinder_problem):
    # dense Chebyshev(η) × Fourier(ξ) solve with zero Dirichlet data at |η| = 12
    sp, grid, phi, g, out, _ = cylinder_problem
    xc, D = _cheb(140, 12.0)
    D2 = (D @ D)[1:-1, 1:-1]
    xi = xc[1:-1]
    P = sp.apply_p_dxi2(np.eye(sp.n))
    A = np.kron(np.eye(sp.n), D2 + np.diag(potential(xi))) + np.kron(P, np.eye(xi.size))
    TH, X = sp.theta[:, None], xi[None, :]
    exact = np.exp(-(X - 0.3) ** 2) * (1 + 0.3 * np.cos(TH) + 0.2 * np.sin(2 * TH) * X)
    rhs = cylinder_operator_cheb(exact, D2, xi, P).ravel()
    direct = np.linalg.solve(A, rhs).reshape(sp.n, xi.size)
    mode = np.vstack([grid.interp(row, xi) for row in out.values])
    assert np.max(np.abs(direct - mode)) < 1e-5


def cylinder_operator_cheb(v, D2, x, P):
    return v @ D2.T + potential(x)[None, :] * v + P @ v
