import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from liouville_max._panels import PanelGrid
from liouville_max.errors import ModulationTooLarge, OutOfAsymptoticRange
from liouville_max.profile import (B0, B0_LEGACY, InnerProfile, KernelBasis, beta_of, bubble_1d,
                                   bubble_2d, inner_v0, modulation_shapes, scaling_params)

LOG2 = np.log(2.0)


def test_bubble_at_origin():
    U, U1, _ = bubble_1d(0.0)
    assert abs(U - LOG2) < 1e-15
    assert abs(U - 0.693147) < 1e-6
    assert U1 == 0.0


def test_tail_offset_as_stated():
    # literal statement: U(20) + 40 - log 2 vanishes up to e^{-40}
    U, _, _ = bubble_1d(20.0)
    assert -1e-15 < U + 40 - LOG2 < 1e-15


def test_tail_offset_true_value():
    # U = log 8 - 2|t| - 2 log(1 + e^{-2|t|}) so the affine tail has offset log 8
    U, _, _ = bubble_1d(20.0)
    assert abs(U + 40 - 3 * LOG2) < 1e-14  # a few ulps of 40
    assert B0 == pytest.approx(3 * LOG2, abs=1e-16)


@settings(max_examples=1000, deadline=None)
@given(t=st.floats(-40.0, 40.0))
def test_bubble_ode(t):
    U, _, U2 = bubble_1d(t)
    assert abs(U2 + np.exp(U)) < 1e-12


@settings(max_examples=200, deadline=None)
@given(t=st.floats(-30.0, 30.0))
def test_bubble_is_even_and_derivative_consistent(t):
    U, U1, _ = bubble_1d(t)
    assert bubble_1d(-t)[0] == pytest.approx(U, abs=1e-15)
    h = 1e-5
    fd = (bubble_1d(t + h)[0] - bubble_1d(t - h)[0]) / (2 * h)
    assert abs(fd - U1) < 1e-8


def test_tail_defect_decay():
    t = np.array([2.0, 4.0, 8.0])
    d = InnerProfile().tail_defect(t)
    # -2 log1p(e^{-2t}) ~ -2 e^{-2t}
    assert np.allclose(d / np.exp(-2 * t), -2.0, rtol=2e-2)


def test_bubble_2d():
    assert abs(bubble_2d(0.0) - np.log(8.0)) < 1e-15
    r = np.linspace(1e-3, 50, 2001)
    w = bubble_2d(r)
    # Δw = w'' + w'/r = -8/(1+r²)² in closed form, so the PDE residual is e^w - 8/(1+r²)²
    lap = -8.0 / (1 + r * r) ** 2
    assert np.max(np.abs(lap + np.exp(w))) < 1e-12
    mass = 2 * np.pi * integrate.quad(lambda s: s * np.exp(bubble_2d(s)), 0, np.inf,
                                       epsabs=0, epsrel=1e-12)[0]
    assert abs(mass / (8 * np.pi) - 1) < 1e-6


def test_beta_values():
    # 2 log(1/(2λ)) + b0 at λ = 1e-4
    assert beta_of(1e-4, b0=B0_LEGACY) == pytest.approx(2 * np.log(5000) + LOG2, abs=1e-12)
    assert abs(beta_of(1e-4, b0=B0_LEGACY) - 17.7275) < 1e-4
    assert beta_of(1e-4) == pytest.approx(2 * np.log(5000) + 3 * LOG2, abs=1e-12)


def test_concentric_mu(model, concentric_fb):
    sp = scaling_params(1e-4, concentric_fb, model)
    b = sp.beta
    mu_ref = (b + 2 * np.log(b)) / (2.0 * 1e-4 * LOG2)
    assert np.max(np.abs(sp.mu / mu_ref - 1)) < 1e-13


@pytest.mark.parametrize("lam", [1e-2, 1e-5, 1e-9])
def test_alpha_identity(lam, circles_fb, circles_map):
    m = circles_map.model
    sp = scaling_params(lam, circles_fb, m)
    lhs = sp.alpha * sp.a0 * m.R * np.log(np.sqrt(m.R1 / m.R2))
    assert lhs == pytest.approx(sp.beta + 2 * np.log(sp.beta), rel=1e-14)
    assert np.allclose(sp.lam * sp.mu, sp.alpha * sp.normal_deriv, rtol=1e-13)


def test_out_of_range(model, concentric_fb):
    with pytest.raises(OutOfAsymptoticRange):
        scaling_params(0.5, concentric_fb, model)


def test_inner_v0_on_curve(model, concentric_fb):
    sp = scaling_params(1e-4, concentric_fb, model)
    s = np.linspace(0, sp.length, 9)
    v = inner_v0(s, 0 * s, None, sp)
    assert np.allclose(v, np.log(2 * sp.mu_at(s) ** 2), atol=1e-13)


def test_inner_v0_matches_affine_tail(model, concentric_fb):
    sp = scaling_params(1e-4, concentric_fb, model)
    mu = sp.mu[0]
    eta = np.array([3.0, 6.0, 9.0])
    t = eta / (sp.lam * mu)
    d = inner_v0(0 * t, t, None, sp) + sp.a0 * sp.lam * mu * np.abs(t) - sp.b0 - 2 * np.log(mu)
    assert np.allclose(d / np.exp(-sp.a0 * eta), -2.0, rtol=5e-2)


class _Probe:
    def __init__(self, eps):
        self.eps = eps

    def evaluate(self, s, eta):
        g = np.exp(-eta ** 2) * (1 + 0.2 * np.cos(s))
        ge = -2 * eta * np.exp(-eta ** 2) * (1 + 0.2 * np.cos(s))
        return self.eps * g, self.eps * ge


def test_inner_v0_first_order_shift(model, concentric_fb):
    sp = scaling_params(1e-4, concentric_fb, model)
    mu = sp.mu[0]
    eta = np.linspace(-3, 3, 13)
    t = eta / (sp.lam * mu)
    s = np.full_like(t, 0.7)
    base = inner_v0(s, t, None, sp)
    errs = []
    for eps in (1e-3, 5e-4):
        f, fe = _Probe(eps).evaluate(s, eta)
        lin = bubble_1d(eta)[1] * f + 2 * fe
        errs.append(np.max(np.abs(inner_v0(s, t, _Probe(eps), sp) - base - lin)))
    # remainder is second order in f
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_modulation_too_large(model, concentric_fb):
    sp = scaling_params(1e-4, concentric_fb, model)
    eta = np.array([0.5])
    with pytest.raises(ModulationTooLarge):
        inner_v0(eta, eta / (sp.lam * sp.mu[0]), _Probe(10.0), sp)


# modulation shapes -----------------------------------------------------------

def _grid(Q):
    return PanelGrid.symmetric(25.0 if np.isinf(Q) else 60.0 * Q, 0.25)


def _integrals(Q):
    g = _grid(Q)
    sh = modulation_shapes(Q, g.x)
    _, U1, _ = bubble_1d(g.x)
    k2 = g.x * U1 + 2
    return {name: g.integrate(getattr(sh, name) * base)
            for name, base in (("Z1", U1), ("Z2", U1), ("W1", U1), ("W2", U1))} | {
        name + "k": g.integrate(getattr(sh, name) * k2) for name in ("Z1", "Z2", "W1", "W2")}


def test_shape_identities_infinite_Q():
    I = _integrals(np.inf)
    assert abs(I["Z1"] - 8) < 1e-8
    assert abs(I["Z2"]) < 1e-10
    assert abs(I["Z1k"]) < 1e-8
    assert abs(I["Z2k"] + 8) < 1e-8


@pytest.mark.parametrize("Q", [1.0, 2.0, 8.0, np.inf])
def test_W2_orthogonal_to_U_prime(Q):
    assert abs(_integrals(Q)["W2"]) < 1e-10


@pytest.mark.parametrize("Q", [1.0, 2.0])
def test_W_cross_identity_as_stated(Q):
    I = _integrals(Q)
    assert abs(I["W1"] + I["W2k"]) < 1e-8


@pytest.mark.parametrize("Q", [1.0, 2.0])
def test_W_cross_identity_measured_sign(Q):
    I = _integrals(Q)
    assert abs(I["W1"] - I["W2k"]) < 1e-8


@settings(max_examples=1000, deadline=None)
@given(eta=st.floats(-30.0, 30.0))
def test_kernel_wronskian(eta):
    kb = KernelBasis()
    assert abs(kb.wronskian_at(eta) - 4.0) < 1e-12
    r1, r2 = kb.operator_residual(eta)
    assert abs(r1) < 1e-12 and abs(r2) < 1e-12
