import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize

from liouville_max.errors import InnerRegionTooWide, NewtonFailed, NoSolution
from liouville_max.geometry import AnnulusModel, ConformalMap, free_boundary
from liouville_max.harmonic import harmonic_measure, outer_w0
from liouville_max.profile import scaling_params
from liouville_max.solver import (ExactRadial, PolarDiscretization, SolverConstants,
                                  assemble_u0, bifurcation_point, exact_radial, lambda_of_c,
                                  limit_mass, newton_solve, nonradial_branch, radial_branches,
                                  radial_fold, residual, residual_scaling_study, validate_theorem)

FIX = AnnulusModel(2.0, 0.5)


def radial_oracle(c, r0, lam, r):
    # u = log(2c² sech²(c log(r/r0))) - 2 log(λr) and its derivatives, straight from the formula
    x = c * np.log(r / r0)
    u = np.log(2 * c * c / np.cosh(x) ** 2) - 2 * np.log(lam * r)
    ur = (-2 * c * np.tanh(x) - 2) / r
    urr = (-2 * c * c / np.cosh(x) ** 2 + 2 * c * np.tanh(x) + 2) / r ** 2
    return u, ur, urr


def oracle_roots(lam, m):
    """Roots of u(R1) = u(R2) = 0 at 50 digits, as (c, log r0, log(c - 1)).

    u(R1) = 0 gives log r0 = log R1 ∓ acosh(√2 c/(λR1))/c in closed form; the
    remaining condition u(R2) = 0 is bracketed on a log(c - 1) scan and refined.
    Near the minimal end the two conditions agree to leading order, hence the
    extended precision.
    """
    import mpmath as mp
    mp.mp.dps = 50
    R1, R2, L = mp.mpf(m.R1), mp.mpf(m.R2), mp.mpf(lam)

    def g(le, sign):
        c = 1 + mp.exp(le)
        arg = mp.sqrt(2) * c / (L * R1)
        if arg < 1:
            return None
        lr0 = mp.log(R1) - sign * mp.acosh(arg) / c
        return mp.log(2 * c * c) - 2 * mp.log(mp.cosh(c * (mp.log(R2) - lr0))) - 2 * mp.log(L * R2), lr0

    roots = []
    grid = [mp.mpf(x) for x in np.linspace(-60.0, 6.0, 331)]
    for sign in (1, -1):
        vals = [g(x, sign) for x in grid]
        for a, b, va, vb in zip(grid, grid[1:], vals, vals[1:]):
            if va is None or vb is None or va[0] * vb[0] > 0:
                continue
            le = mp.findroot(lambda x: g(x, sign)[0], (a, b), solver="anderson")
            roots.append((float(1 + mp.exp(le)), float(g(le, sign)[1]), float(le)))
    return sorted(roots, key=lambda p: p[2])


# constants ---------------------------------------------------------------------

def test_constants_chain():
    sc = SolverConstants()
    assert sc.K_eff == 4 * sc.M + 1
    with pytest.raises(ValueError):
        SolverConstants(m1=4.0)  # m_rho > 2 m1 fails
    with pytest.raises(ValueError):
        SolverConstants(theta=0.48)  # theta + eps < omega_star fails
    with pytest.raises(ValueError):
        SolverConstants(K=3.0)
    assert SolverConstants(M=1.0).as_dict()["K"] == 5.0


def test_constants_violations_reported():
    v = SolverConstants(M=1.0).violations(hopf=0.72)
    assert any("m2" in s for s in v)


# exact radial family -------------------------------------------------------------

@pytest.mark.parametrize("lam", [0.5, 1e-2, 1e-4, 1e-8])
def test_exact_roots_match_oracle(lam):
    sols = exact_radial(lam, FIX)
    ref = oracle_roots(lam, FIX)
    assert len(sols) == len(ref) == 2
    for s, (c, lr0, le) in zip(sols, ref):
        # c - 1 underflows to 0 in double on the minimal end, so c is compared relatively
        assert s.c == pytest.approx(c, rel=1e-12)
        assert np.log(s.r0) == pytest.approx(lr0, abs=1e-9)
    assert [s.label for s in sols] == ["minimal", "maximal"]
    assert sols[0].sup_u < sols[1].sup_u


@pytest.mark.parametrize("lam", [0.5, 1e-2, 1e-4, 1e-8])
def test_exact_substitution(lam):
    r = np.geomspace(FIX.R2, FIX.R1, 401)
    for s in exact_radial(lam, FIX):
        u, ur, urr = radial_oracle(s.c, s.r0, lam, r)
        res = urr + ur / r + lam ** 2 * np.exp(u)
        scale = max(1.0, np.max(np.abs(urr)))
        assert np.max(np.abs(res)) / scale < 1e-11
        assert np.max(np.abs(s.residual(r))) / scale < 1e-11
        assert max(map(abs, s.boundary_values())) < 1e-11


@pytest.mark.parametrize("lam", [0.5, 1e-2, 1e-4, 1e-8])
def test_mass_closed_form(lam):
    for s in exact_radial(lam, FIX):
        ref = 2 * np.pi * integrate.quad(lambda rr: rr * np.exp(s.log_source(rr)), FIX.R2, FIX.R1,
                                         points=[s.peak_radius] if FIX.R2 < s.peak_radius < FIX.R1 else None,
                                         epsabs=0, epsrel=1e-13, limit=400)[0]
        assert abs(s.mass - ref) / ref < 1e-9
        assert abs(s.mass_quadrature() - s.mass) / s.mass < 1e-9


def test_fold_and_no_solution():
    cf, lmax = radial_fold(FIX)
    assert lambda_of_c(cf * 0.99, FIX) < lmax and lambda_of_c(cf * 1.01, FIX) < lmax
    with pytest.raises(NoSolution):
        exact_radial(1.01 * lmax, FIX)
    with pytest.raises(ValueError):
        exact_radial(-1.0, FIX)


def test_peak_radius_approaches_R():
    lams = [1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8]
    err = [abs(exact_radial(l, FIX)[1].peak_radius - FIX.R) for l in lams]
    assert all(a > b for a, b in zip(err, err[1:]))
    assert err[-1] < 0.05


@settings(max_examples=40, deadline=None)
@given(le=st.floats(-8.0, 5.0))
def test_family_closed_form_consistency(le):
    e = ExactRadial.from_eps(np.exp(le), FIX)
    assert max(map(abs, e.boundary_values())) < 1e-10 * max(1.0, e.sup_u)
    assert e.lam == pytest.approx(float(lambda_of_c(e.c, FIX)), rel=1e-14)


def test_radial_branches_meet_at_fold():
    lo, hi = radial_branches(FIX, n_points=12)
    assert lo.label == "minimal" and hi.label == "maximal"
    assert lo.points[-1].c == pytest.approx(hi.points[-1].c, rel=1e-12)
    assert all(p.sup_u < q.sup_u for p, q in zip(lo.points[:-1], hi.points[:-1]))


# discretisation and Newton ------------------------------------------------------

@pytest.fixture(scope="module")
def radial_disc():
    return PolarDiscretization(FIX, n_elements=12, order=16, focus_width=0.1)


@pytest.mark.parametrize("lam", [1e-2, 1e-4, 1e-8])
def test_newton_from_perturbed_exact(lam, radial_disc):
    d = radial_disc
    ex = exact_radial(lam, FIX)[1]
    ue = ex(d.r)[:, None]
    bump = np.sin(np.pi * (d.rho - d.rho[0]) / (d.rho[-1] - d.rho[0]))[:, None]
    sol = newton_solve(ue + 1e-3 * bump, lam, d)
    assert sol.residual_norm < 1e-10
    assert np.max(np.abs(sol.u - ue)) < 1e-8
    assert abs(sol.mass - ex.mass) / ex.mass < 1e-8


def test_exact_weak_residual_small(radial_disc):
    ex = exact_radial(1e-4, FIX)[1]
    _, n = residual(ex(radial_disc.r)[:, None], 1e-4, radial_disc)
    assert n["dual"] < 1e-9


def test_strong_residual_as_stated(radial_disc):
    # literal target: nodal strong residual of the exact solution below 1e-10
    ex = exact_radial(1e-4, FIX)[1]
    _, n = residual(ex(radial_disc.r)[:, None], 1e-4, radial_disc)
    assert n["sup"] < 1e-10


def test_jacobian_fd_and_symmetry():
    d = PolarDiscretization(FIX, n_theta=5, n_elements=6, order=8, focus_width=0.2)
    rng = np.random.default_rng(7)
    u = exact_radial(1e-2, FIX)[1](d.r)[:, None] + 0.1 * rng.normal(size=d.shape)
    u[0] = u[-1] = 0.0
    ii = slice(1, -1)
    J = d.jacobian(u, 1e-2)
    assert np.max(np.abs(J - J.T)) < 1e-12 * np.max(np.abs(J))
    v = np.zeros(d.shape)
    v[ii] = rng.normal(size=d.shape)[ii]
    h = 1e-6
    fd = (d.weak_residual(u + h * v, 1e-2)[ii] - d.weak_residual(u - h * v, 1e-2)[ii]).ravel() / (2 * h)
    jv = J @ v[ii].ravel()
    assert np.linalg.norm(fd - jv) / np.linalg.norm(jv) < 1e-6


def test_newton_reports_failure(radial_disc):
    ex = exact_radial(1e-4, FIX)[1]
    with pytest.raises(NewtonFailed) as exc:
        newton_solve(ex(radial_disc.r)[:, None] * 0.01, 1e-4, radial_disc, max_iter=1)
    assert exc.value.last is not None


def test_newton_rejects_bad_input(radial_disc):
    with pytest.raises(ValueError):
        newton_solve(np.full(radial_disc.shape, np.nan), 1e-4, radial_disc)


# assembly -------------------------------------------------------------------------

@pytest.fixture(scope="module")
def assembled():
    cm = ConformalMap.identity(FIX)
    fb = free_boundary(cm)
    sc = SolverConstants(M=1.0)
    sp = scaling_params(1e-4, fb, FIX, M=1.0)
    oa = outer_w0(FIX, sp, fb)
    disc = PolarDiscretization(FIX, n_theta=9, n_elements=12, order=16, focus_width=0.1)
    return assemble_u0(sp, oa, None, sc, disc, fb, cm), sp, oa, disc, sc, fb


def test_partition_of_unity(assembled):
    ga = assembled[0]
    assert ga.partition_defect() < 1e-14
    assert np.all(ga.u1 == 0) and np.all(ga.u2 == 0)


def test_u0_equals_outer_field_away_from_gamma(assembled):
    ga, sp, oa, disc, *_ = assembled
    far = ~(np.abs(ga.t) <= 2 * sp.delta_at(ga.s))
    far[[0, -1]] = False  # Dirichlet rows
    r = np.broadcast_to(disc.r[:, None], disc.shape)
    th = np.broadcast_to(disc.theta[None, :], disc.shape)
    plus = r >= FIX.R
    w = np.where(plus, oa.w0("plus", np.where(plus, r, FIX.R), th),
                 oa.w0("minus", np.where(plus, FIX.R, r), th))
    assert np.max(np.abs(ga.u0[far] - w[far])) < 1e-12


def test_u0_on_gamma(assembled):
    _, sp, *_ = assembled
    from liouville_max.profile import inner_v0
    s = np.linspace(0, sp.length, 5)
    assert np.allclose(inner_v0(s, 0 * s, None, sp), np.log(2 * sp.mu_at(s) ** 2), atol=1e-13)


def test_newton_from_u0_matches_maximal(assembled):
    ga, sp, oa, disc, *_ = assembled
    d = disc.radial()
    sol = newton_solve(ga.u0, 1e-4, disc)
    ex = exact_radial(1e-4, FIX)[1]
    assert sol.newton_iters <= 15
    assert sol.residual_norm < 1e-10
    assert np.max(np.abs(sol.u - ex(disc.r)[:, None])) < 1e-6
    assert d.n_theta == 1


def test_inner_region_too_wide(assembled):
    _, _, _, disc, sc, fb = assembled
    sp = scaling_params(0.05, fb, FIX, M=1.0)
    with pytest.raises(InnerRegionTooWide):
        assemble_u0(sp, outer_w0(FIX, sp, fb), None, sc, disc, fb)


# validation ----------------------------------------------------------------------

def test_limit_mass_value():
    assert limit_mass(FIX) == pytest.approx(4 * np.pi / np.log(2.0), rel=1e-15)
    assert abs(limit_mass(FIX) - 18.12944) < 1e-5


def test_validate_trends():
    rep = validate_theorem([1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8], FIX)
    assert rep["trends"]["mass_monotone_towards_limit"]
    assert rep["trends"]["profile_defect_monotone"]
    assert rep["trends"]["r_peak_error_monotone"]
    hm = harmonic_measure(FIX)
    assert hm.b_minus > 0
    with pytest.raises(ValueError):
        validate_theorem([], FIX)


def test_scaling_study_requires_sweep():
    with pytest.raises(ValueError):
        residual_scaling_study([1e-3, 1e-4], SolverConstants(M=1.0))


# non-radial branch ------------------------------------------------------------------

def test_bifurcation_point():
    e = bifurcation_point(FIX, 3)
    assert e.c == pytest.approx(3.3029, abs=1e-3)
    assert e.lam == pytest.approx(0.92586, abs=1e-4)
    with pytest.raises(ValueError):
        bifurcation_point(FIX, 0)


@pytest.fixture(scope="module")
def kfold():
    return nonradial_branch(FIX, 3, lam_stop=0.1)


def test_nonradial_branch(kfold):
    pts = kfold.points
    assert kfold.label == "intermediate" and kfold.k == 3
    assert pts[-1]["lambda"] < 0.1
    assert all(p["residual"] < 1e-8 for p in pts)
    assert all(p["n_peaks"] == 3 for p in pts[len(pts) // 4:])
    assert pts[-1]["concentration"] > 0.9
    # mass strictly between the radial branches at the same λ
    inside = 0
    for p in pts:
        lo, hi = exact_radial(p["lambda"], FIX)
        inside += lo.mass < p["mass"] < hi.mass
    assert inside == len(pts)


def test_three_branches_coexist(kfold):
    lo_lam, hi_lam = kfold.lam_range
    cf, lmax = radial_fold(FIX)
    assert hi_lam < lmax and lo_lam < hi_lam
    p = kfold.at(0.5)
    assert len(exact_radial(p["lambda"], FIX)) == 2
