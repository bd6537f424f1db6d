import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liouville_max.errors import InvalidDomain
from liouville_max.geometry import (AnnulusModel, BoundaryCurve, DoublyConnectedDomain,
                                    build_conformal_map, conformal_modulus, domain_from_json,
                                    free_boundary, mobius_circle_map, normal_balance_defect)


def inversive_modulus(R_out, c, r):
    # two circles |z| = R_out and |z - c| = r map to concentric circles with
    # cosh(log(1/q)) equal to the inversive distance (R_out² + r² - c²)/(2 R_out r)
    d = (R_out ** 2 + r ** 2 - c ** 2) / (2 * R_out * r)
    return float(np.exp(-np.arccosh(d)))


def test_concentric_modulus():
    m = conformal_modulus(DoublyConnectedDomain.annulus(2.0, 0.5))
    assert abs(m.q - 0.25) < 1e-12
    assert abs(m.R - 1.0) < 1e-12


@pytest.mark.parametrize("c,r", [(0.3, 0.5), (0.6, 0.4)])
def test_circle_modulus_matches_inversive_distance(c, r):
    m = conformal_modulus(DoublyConnectedDomain(BoundaryCurve.circle(0, 2.0),
                                                BoundaryCurve.circle(c, r)))
    q_ref = inversive_modulus(2.0, c, r)
    assert abs(m.q - q_ref) < 1e-8
    assert abs(mobius_circle_map(2.0, c, r)[1] - q_ref) < 1e-13


def test_touching_inner_curve_rejected():
    with pytest.raises(InvalidDomain):
        conformal_modulus(DoublyConnectedDomain(BoundaryCurve.circle(0, 2.0),
                                                BoundaryCurve.circle(1.5, 0.5)))


def test_intersecting_curves_rejected():
    with pytest.raises(InvalidDomain):
        build_conformal_map(DoublyConnectedDomain(BoundaryCurve.circle(0, 2.0),
                                                  BoundaryCurve.circle(1.6, 0.6)))


def test_concentric_map_is_identity(built_concentric_map):
    z = np.array([1.2 + 0.3j, -0.7 + 0.1j, 0.1 - 1.5j])
    assert np.max(np.abs(built_concentric_map.forward(z) - z)) < 1e-12
    assert built_concentric_map.cauchy_riemann_residual(z) < 1e-12


def test_circle_map_matches_mobius_pointwise(circles_map):
    psi, _ = mobius_circle_map(2.0, 0.3, 0.5)
    z = np.array([1.5j, -1.2, 1.0 + 0.5j, -0.4 - 1.1j])
    rot = circles_map.forward(z[0]) / psi(z[0])
    assert abs(abs(rot) - 1) < 1e-8
    assert np.max(np.abs(circles_map.forward(z) - rot * psi(z))) < 1e-8


LEVELS = [(256, 48), (256, 64), (256, 96), (256, 128)]


def test_map_self_convergence(perturbed_domain):
    # boundary residual of the fitted map decays spectrally with the series length
    maps = [build_conformal_map(perturbed_domain, res) for res in LEVELS]
    errs = [cm.boundary_residual for cm in maps]
    assert all(a > 10 * b for a, b in zip(errs, errs[1:]))
    z = np.array([1.3 + 0.2j, -0.9j, -1.1 + 0.5j])
    assert maps[-1].round_trip_error(z) < 1e-12


def test_concentric_free_boundary(concentric_fb):
    fb = concentric_fb
    assert np.max(np.abs(np.abs(fb.gamma) - 1)) < 1e-13
    assert np.max(np.abs(fb.normal_deriv - 1)) < 1e-13
    assert np.max(np.abs(fb.curvature - 1)) < 1e-10
    assert abs(fb.length - 2 * np.pi) < 1e-12


@pytest.mark.parametrize("which", ["circles", "perturbed"])
def test_flux_identity(which, circles_map, perturbed_domain):
    cm = circles_map if which == "circles" else build_conformal_map(perturbed_domain)
    fb = free_boundary(cm)
    assert abs(fb.flux_integral() / (2 * np.pi * cm.model.R) - 1) < 1e-8


def test_free_boundary_is_closed_curve(circles_fb):
    assert abs(circles_fb.total_turning() / (2 * np.pi) - 1) < 1e-8


def test_normal_balance_concentric(concentric_fb, model):
    assert normal_balance_defect(concentric_fb, model) < 1e-12


def test_normal_balance_circles(circles_map):
    assert normal_balance_defect(free_boundary(circles_map), circles_map.model) < 1e-6


def test_normal_balance_refines(perturbed_domain):
    vals = []
    for res in LEVELS[:3]:
        cm = build_conformal_map(perturbed_domain, res)
        vals.append(normal_balance_defect(free_boundary(cm), cm.model))
    # already at roundoff on every accepted level: refinement cannot increase it
    assert vals[-1] <= vals[0] + 1e-15
    assert max(vals) < 1e-12


def test_domain_from_json():
    d = domain_from_json({"annulus": {"R1": 3.0, "R2": 1.0}})
    assert isinstance(d, DoublyConnectedDomain)
    with pytest.raises(InvalidDomain):
        domain_from_json({"square": {}})


@settings(max_examples=25, deadline=None)
@given(R1=st.floats(0.5, 10.0), ratio=st.floats(0.05, 0.9))
def test_model_invariants(R1, ratio):
    m = AnnulusModel(R1, R1 * ratio)
    assert m.R2 < m.R < m.R1
    assert np.isclose(m.R ** 2, m.R1 * m.R2, rtol=1e-14)
    assert np.isclose(m.q, ratio, rtol=1e-14)
