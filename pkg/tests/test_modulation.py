import numpy as np
import pytest

from liouville_max.errors import CalibrationFailed
from liouville_max.inner_linear import fundamental_set, mode_grid, sl_spectrum
from liouville_max.modulation import (build_fs_bank, calibrate_Q, calibration_grid,
                                      orthogonality_closure, project_rhs, projection_matrices,
                                      retained_modes, solve_modulation, window_profile)
from liouville_max.profile import bubble_1d, modulation_shapes, scaling_params


def matrices_at(w, Q, window=None):
    g = calibration_grid(Q)
    return projection_matrices(w, Q, fundamental_set(w, 0.05, grid=g),
                               modulation_shapes(Q, g.x), window=window)


def test_Z0_infinite_Q():
    # only Z is asserted: the flag also covers W, whose tails do not close at Q = ∞
    pm = matrices_at(0.0, np.inf)
    assert np.max(np.abs(pm.Z - np.array([[8.0, 0.0], [0.0, -8.0]]))) < 1e-6


def test_Z0_against_direct_quadrature():
    # rows are the duals U' and ηU' + 2 at ω = 0
    g = calibration_grid(np.inf)
    sh = modulation_shapes(np.inf, g.x)
    _, U1, _ = bubble_1d(g.x)
    ref = np.array([[g.integrate(sh.Z1 * U1), g.integrate(sh.Z2 * U1)],
                    [g.integrate(sh.Z1 * (g.x * U1 + 2)), g.integrate(sh.Z2 * (g.x * U1 + 2))]])
    Z = matrices_at(0.0, np.inf).Z
    # k⁺₀ = U' exactly; l = ηU' + 2
    assert np.max(np.abs(Z - ref)) < 1e-9


@pytest.mark.parametrize("Q", [2.0, 8.0, np.inf])
def test_W0_off_diagonal(Q):
    pm = matrices_at(0.0, Q)
    assert abs(pm.W[0, 1]) < 1e-8


@pytest.mark.parametrize("Q", [2.0, 8.0])
def test_W0_cross_identity_measured(Q):
    # the two integrals agree with equal sign (the opposite sign as stated does not hold)
    pm = matrices_at(0.0, Q)
    assert abs(pm.W[0, 0] - pm.W[1, 1]) < 1e-8 * max(1.0, abs(pm.W[0, 0]))


def test_full_line_matrices_degenerate_for_positive_omega():
    pm = matrices_at(0.1, 2.0)
    assert pm.converged
    assert pm.relative_min_singular_value < 1e-10


def test_shape_grid_mismatch():
    g = calibration_grid(2.0)
    with pytest.raises(ValueError):
        projection_matrices(0.0, 2.0, fundamental_set(0.0, grid=g),
                            modulation_shapes(2.0, np.linspace(-1, 1, 5)))


def test_calibration_full_line_fails():
    with pytest.raises(CalibrationFailed) as exc:
        calibrate_Q(n_omega=6)
    assert all(v < 1e-6 for v in exc.value.table.values())


def test_windowed_calibration_deterministic():
    a = calibrate_Q(n_omega=6, window=4.0, Q_grid=(2.0, 8.0))
    b = calibrate_Q(n_omega=6, window=4.0, Q_grid=(2.0, 8.0))
    assert a == b
    assert a[1] > 1e-3


def test_calibration_empty_grid():
    with pytest.raises(ValueError):
        calibrate_Q(Q_grid=())


def test_window_profile():
    x = np.linspace(-10, 10, 401)
    r = window_profile(x, 4.0)
    assert np.all(r[np.abs(x) <= 2.0] == 1.0)
    assert np.all(r[np.abs(x) >= 4.0] == 0.0)
    assert np.all(window_profile(x, None) == 1.0)


# projections and the per-mode solve -------------------------------------------

@pytest.fixture(scope="module")
def mode_setup(circles_fb, circles_map):
    sp = scaling_params(1e-6, circles_fb, circles_map.model)
    spec = sl_spectrum(circles_fb, sp.alpha)
    grid = mode_grid(1.0, 30)
    modes = retained_modes(spec, 0.5)
    bank = build_fs_bank(spec, modes, grid)
    shapes = modulation_shapes(np.inf, grid.x)
    win = sp.log_beta
    mats = [projection_matrices(float(spec.omegas[j]), np.inf,
                                bank[round(float(spec.omegas[j]), 14)], shapes, window=win)
            for j in modes]
    return sp, spec, grid, modes, bank, mats, win


def test_retained_modes_count(mode_setup):
    sp, spec, _, modes, *_ = mode_setup
    assert np.all(spec.omegas[modes] < 0.5)
    assert modes.size == np.sum(spec.omegas < 0.5)
    # K_α ≈ α R ω*
    assert abs(modes.size - 2 * sp.alpha * spec.R * 0.5) <= 3


def test_project_zero(mode_setup):
    _, spec, grid, modes, bank, _, win = mode_setup
    h1, h2 = project_rhs(np.zeros((spec.n, grid.x.size)), spec, bank, modes, window=win, grid=grid)
    assert np.all(h1 == 0) and np.all(h2 == 0)


def test_project_single_mode(mode_setup):
    _, spec, grid, modes, bank, _, win = mode_setup
    j = modes[3]
    fs = bank[round(float(spec.omegas[j]), 14)]
    g = np.outer(spec.eigenfunctions[:, j], fs.k_plus)
    h1, h2 = project_rhs(g, spec, bank, modes, window=win, grid=grid)
    G = spec.weighted_gram()[j, j]
    rho = window_profile(grid.x, win)
    assert h1[3] == pytest.approx(G * grid.integrate(rho * fs.k_plus ** 2), rel=1e-12)
    others = np.delete(np.arange(modes.size), 3)
    assert np.max(np.abs(h1[others])) < 1e-9 * abs(h1[3])
    assert np.max(np.abs(h2[others])) < 1e-9 * abs(h1[3])


def test_solve_modulation_zero(mode_setup):
    _, spec, _, modes, _, mats, _ = mode_setup
    f = solve_modulation((np.zeros(modes.size), np.zeros(modes.size)), mats, spec, modes)
    assert np.all(f.a == 0) and np.all(f.b == 0)


def test_solve_modulation_random(mode_setup, rng):
    _, spec, _, modes, _, mats, _ = mode_setup
    ratios = []
    for _ in range(20):
        h = rng.normal(size=(2, modes.size))
        f = solve_modulation(h, mats, spec, modes)
        for i, pm in enumerate(mats):
            x = np.linalg.solve(pm.system, h[:, i])
            assert np.max(np.abs([f.a[i], f.b[i]] - x)) < 1e-12 * max(1, np.abs(x).max())
        assert f.norms["max_residual"] < 1e-12
        ratios.append(f.norms["ratio"])
    assert max(ratios) / min(ratios) < 10


def test_solve_modulation_singular(mode_setup):
    _, spec, _, modes, _, _, _ = mode_setup
    with pytest.raises(CalibrationFailed):
        solve_modulation(([1.0], [1.0]), [matrices_at(0.1, 2.0)], spec, modes[:1])


# closure ------------------------------------------------------------------------

def test_closure_converges(mode_setup, circles_fb):
    sp, spec = mode_setup[:2]
    h = orthogonality_closure(sp, circles_fb, spec)
    assert h.converged and h.iterations <= 50
    assert h.projections[-1] < 1e-8
    # contraction by roughly a factor ten per sweep
    assert np.median(h.contraction) < 0.2


def test_closure_rhs_size(circles_fb, circles_map):
    # first-sweep projections of the curvature-driven residual against log²β/√β
    vals = []
    for lam in (1e-6, 1e-8, 1e-20):
        sp = scaling_params(lam, circles_fb, circles_map.model)
        spec = sl_spectrum(circles_fb, sp.alpha)
        h = orthogonality_closure(sp, circles_fb, spec, max_iter=0)
        vals.append(h.projections[0] / (np.log(sp.beta) ** 2 / np.sqrt(sp.beta)))
    assert max(vals) < 5 and min(vals) > 0.2


def test_closure_deterministic(mode_setup, circles_fb):
    sp, spec = mode_setup[:2]
    a = orthogonality_closure(sp, circles_fb, spec, max_iter=3)
    b = orthogonality_closure(sp, circles_fb, spec, max_iter=3)
    assert a.projections == b.projections
    assert np.array_equal(a.coeffs.a, b.coeffs.a)
