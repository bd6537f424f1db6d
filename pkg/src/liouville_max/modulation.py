"""Modulation of the inner profile and the projected orthogonality system.

The modulation is ``f(ξ, η) = [a(ξ) η + b(ξ)] Y(η)`` with
``a = Σ a_k y_k`` and ``b = Σ b_k y_k`` over the Sturm-Liouville modes with
``ω_k < ω*``. Projecting the linearised inner residual on the duals of each
mode gives the 2×2 systems ``(Z_ω - ω² W_ω)(a_k, b_k)ᵀ = (h1k, h2k)ᵀ``.

Full-line matrices are degenerate: the linear part of the residual is
``(∂η² + e^U + p ∂ξ²)(U' f + 2 ∂η f)``, so its projection on a kernel element
vanishes whenever the integrals converge. The projected equations therefore
carry the smooth cutoff ``ρ``; ``window=`` selects that form.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _fourier as fou
from ._cutoff import bump
from ._panels import PanelGrid
from .errors import CalibrationFailed
from .inner_linear import FundamentalSet, fundamental_set, mode_grid
from .profile import bubble_1d, modulation_shapes, shape_derivatives

Q_GRID_DEFAULT = (2.0, 4.0, 8.0, 16.0, 32.0)


def window_profile(eta, half_width: float | None):
    """Smooth cutoff ``ρ``: 1 on ``|η| <= L/2``, 0 beyond ``L``; ``None`` gives 1."""
    if half_width is None:
        return np.ones(np.shape(eta))
    return bump(eta, 0.5 * half_width)


# ----------------------------------------------------------------------------
# projection matrices


@dataclass(frozen=True)
class ProjectionMatrices:
    """``Z`` and ``W`` with rows = duals, columns = (shape 1, shape 2).

    ``converged`` is false when the tails of the integrands are not negligible
    on the grid (full-line integrals that diverge).
    """

    omega: float
    Q: float
    Z: np.ndarray
    W: np.ndarray
    min_singular_value: float
    relative_min_singular_value: float
    converged: bool
    window: float | None = None

    @property
    def system(self) -> np.ndarray:
        return self.Z - self.omega ** 2 * self.W

    def as_dict(self) -> dict:
        return {"omega": self.omega, "Q": self.Q, "Z": self.Z.tolist(), "W": self.W.tolist(),
                "min_singular_value": self.min_singular_value,
                "relative_min_singular_value": self.relative_min_singular_value,
                "converged": self.converged, "window": self.window}


def projection_matrices(omega: float, Q: float, fs: FundamentalSet, shapes=None,
                        window: float | None = None, tail_tol: float = 1e-10) -> ProjectionMatrices:
    """Projection integrals of the shape functions against the dual pair of ``fs``.

    The dual pair is ``(k⁺, l)`` for ``ω <= ε`` and ``(k⁺, k⁻)`` otherwise.
    With ``window = L`` every integrand carries the cutoff ``ρ``.
    """
    grid = fs.grid
    if shapes is None:
        shapes = modulation_shapes(Q, grid.x)
    elif shapes.eta.shape != grid.x.shape or not np.allclose(shapes.eta, grid.x):
        raise ValueError("shapes and fundamental set use different grids")
    rho = window_profile(grid.x, window)
    d1, d2 = fs.duals
    def mat(A, B):
        return np.array([[grid.integrate(rho * A * d1), grid.integrate(rho * B * d1)],
                         [grid.integrate(rho * A * d2), grid.integrate(rho * B * d2)]])

    with np.errstate(over="ignore", invalid="ignore"):
        Z = mat(shapes.Z1, shapes.Z2)
        W = mat(shapes.W1, shapes.W2)
        ends = np.concatenate([np.abs(rho * f * d)[[0, -1]] for f in
                               (shapes.Z1, shapes.Z2, shapes.W1, shapes.W2) for d in (d1, d2)])
    scale = max(float(np.max(np.abs(Z))), float(np.max(np.abs(W))), 1e-300)
    converged = bool(np.all(np.isfinite(ends)) and np.max(ends) <= tail_tol * max(scale, 1.0))
    S = Z - omega ** 2 * W
    if not np.all(np.isfinite(S)):
        sv = np.array([np.nan, np.nan])
    else:
        sv = np.linalg.svd(S, compute_uv=False)
    ref = max(float(np.max(np.abs(Z))), omega ** 2 * float(np.max(np.abs(W))), 1e-300)
    return ProjectionMatrices(omega=float(omega), Q=float(Q), Z=Z, W=W,
                              min_singular_value=float(sv[-1]),
                              relative_min_singular_value=float(sv[-1] / ref),
                              converged=converged, window=window)


def calibration_grid(Q: float, T_max: float = 200.0) -> PanelGrid:
    """Grid long enough for integrands decaying like ``exp(-|η|/Q)``."""
    T = min(T_max, 30.0 + 40.0 * (Q if np.isfinite(Q) else 0.0))
    return PanelGrid.symmetric(T, 0.5)


def calibrate_Q(omega_star: float = 0.5, Q_grid=Q_GRID_DEFAULT, n_omega: int = 51,
                eps: float = 0.05, window: float | None = None, floor_min: float = 1e-6):
    """Pick ``Q`` maximising ``min_ω σ_min(Z_ω - ω² W_ω)`` over ``ω ∈ [0, ω*]``.

    Non-converged matrices (full-line integrals that diverge) count as singular.

    Returns
    -------
    (Q, floor, table)
        ``table`` maps each ``Q`` to its floor.

    Raises
    ------
    CalibrationFailed
        If no ``Q`` reaches ``floor_min``.
    """
    if len(Q_grid) == 0:
        raise ValueError("Q_grid must be nonempty")
    omegas = np.linspace(0.0, omega_star, n_omega)
    table = {}
    for Q in Q_grid:
        grid = calibration_grid(Q) if window is None else PanelGrid.symmetric(
            max(30.0, 1.1 * window), 0.25)
        shapes = modulation_shapes(Q, grid.x)
        worst = np.inf
        for w in omegas:
            fs = fundamental_set(float(w), eps, grid=grid)
            pm = projection_matrices(float(w), Q, fs, shapes, window=window)
            val = pm.min_singular_value if pm.converged else 0.0
            if not np.isfinite(val):
                val = 0.0
            worst = min(worst, val)
        table[float(Q)] = float(worst)
    best = max(table, key=lambda q: (table[q], -q))
    if table[best] < floor_min:
        raise _calibration_failure(table, floor_min)
    return best, table[best], table


def _calibration_failure(table, floor_min):
    err = CalibrationFailed(f"no Q reaches the floor {floor_min:.1e}: {table}")
    err.table = table
    return err


# ----------------------------------------------------------------------------
# modulation coefficients


@dataclass(frozen=True)
class ModulationCoeffs:
    """Coefficients ``a_k, b_k`` of ``f`` on the first ``K_α + 1`` frequency indices.

    ``modes`` lists the eigenfunction columns of ``spectrum`` that are retained.
    """

    Q: float
    modes: np.ndarray
    a: np.ndarray
    b: np.ndarray
    spectrum: object = field(repr=False)
    norms: dict = field(default_factory=dict)

    @property
    def K_alpha(self) -> int:
        return int(np.max(self.spectrum.freq_index[self.modes])) if self.modes.size else -1

    @classmethod
    def zero(cls, spectrum, omega_star: float = 0.5, Q: float = np.inf) -> "ModulationCoeffs":
        modes = retained_modes(spectrum, omega_star)
        z = np.zeros(modes.size)
        return cls(Q, modes, z, z.copy(), spectrum)

    def profiles_theta(self, derivative: int = 0):
        """``a(ξ)`` and ``b(ξ)`` (or their ξ-derivatives) at the spectrum's θ nodes."""
        Y = self.spectrum.eigenfunctions[:, self.modes]
        a, b = Y @ self.a, Y @ self.b
        for _ in range(derivative):
            a = _dxi(a, self.spectrum)
            b = _dxi(b, self.spectrum)
        return a, b

    def derivatives(self, eta):
        """Dictionary of ``f`` and its derivatives on the grid (θ nodes) × ``eta``.

        Keys: ``f, e, ee, eee, x, xe, xee, xx, xxe`` (``e`` for ∂η, ``x`` for ∂ξ).
        """
        eta = np.asarray(eta, float)
        Yd = shape_derivatives(self.Q, eta)
        def eta_part(k):
            # ∂η^k [η Y] and ∂η^k Y
            ey = eta * Yd[k] + (k * Yd[k - 1] if k > 0 else 0.0)
            return ey, Yd[k]

        out = {}
        for xd, tag in ((0, ""), (1, "x"), (2, "xx")):
            a, b = self.profiles_theta(xd)
            for k, etag in ((0, ""), (1, "e"), (2, "ee"), (3, "eee")):
                if xd == 2 and k > 1:
                    continue
                if xd == 1 and k > 2:
                    continue
                ey, y = eta_part(k)
                key = (tag + etag) or "f"
                out[key] = a[:, None] * ey[None, :] + b[:, None] * y[None, :]
        return out

    def evaluate(self, s, eta):
        """``(f, ∂η f)`` at arclength ``s`` and stretched distance ``eta`` (same shape)."""
        s = np.asarray(s, float)
        eta = np.asarray(eta, float)
        Y = self.spectrum.at_arclength(s.ravel())[:, self.modes]
        a = (Y @ self.a).reshape(s.shape)
        b = (Y @ self.b).reshape(s.shape)
        Yd = shape_derivatives(self.Q, eta.ravel())
        Y0, Y1 = Yd[0].reshape(eta.shape), Yd[1].reshape(eta.shape)
        return (a * eta + b) * Y0, a * (Y0 + eta * Y1) + b * Y1


def _dxi(v, spectrum):
    """``∂ξ`` of samples at the θ nodes: ``(1/(α σ)) ∂θ``."""
    return fou.diff_periodic(v) / (spectrum.alpha * spectrum.sigma)


def retained_modes(spectrum, omega_star: float) -> np.ndarray:
    return np.where(spectrum.omegas < omega_star)[0]


def build_fs_bank(spectrum, modes, grid: PanelGrid, eps: float = 0.05) -> dict:
    bank = {}
    for j in modes:
        key = round(float(spectrum.omegas[j]), 14)
        if key not in bank:
            bank[key] = fundamental_set(float(spectrum.omegas[j]), eps, grid=grid)
    return bank


def _fs_for(bank, omega):
    return bank[round(float(omega), 14)]


def project_rhs(g, spectrum, fs_bank: dict, modes=None, window: float | None = None,
                grid: PanelGrid | None = None):
    """Projections ``h_ik = ∫∫ ρ g d_i(η) y_k(ξ)`` for the retained modes.

    The ξ-integral uses the Sturm-Liouville weight, so ``y_k`` are orthogonal.

    Parameters
    ----------
    g : ndarray or CylinderField
        Samples ``(n_xi, n_eta)``.

    Returns
    -------
    (h1, h2) : arrays indexed like ``modes``.
    """
    values = getattr(g, "values", g)
    grid = grid or getattr(g, "grid", None)
    if modes is None:
        modes = np.arange(spectrum.omegas.size)
    Y = spectrum.eigenfunctions
    w = spectrum._wprod_weights()
    gk = (Y[:, modes].T * w[None, :]) @ np.asarray(values)  # (n_modes, n_eta)
    rho = window_profile(grid.x, window)
    h1 = np.empty(len(modes))
    h2 = np.empty(len(modes))
    for i, j in enumerate(modes):
        d1, d2 = _fs_for(fs_bank, spectrum.omegas[j]).duals
        h1[i] = grid.integrate(rho * gk[i] * d1)
        h2[i] = grid.integrate(rho * gk[i] * d2)
    return h1, h2


def solve_modulation(h, matrices, spectrum=None, modes=None, Q: float = np.inf,
                     singular_tol: float = 1e-12) -> ModulationCoeffs:
    """Solve the per-mode 2×2 systems ``(Z - ω² W)(a_k, b_k)ᵀ = (h1k, h2k)ᵀ``.

    Raises
    ------
    CalibrationFailed
        If a system is numerically singular.
    """
    h1, h2 = (np.asarray(x, float) for x in h)
    a = np.empty(h1.size)
    b = np.empty(h1.size)
    res = 0.0
    for i, pm in enumerate(matrices):
        S = pm.system
        if not np.all(np.isfinite(S)) or pm.min_singular_value < singular_tol:
            raise CalibrationFailed(f"singular modulation system at omega={pm.omega}")
        x = np.linalg.solve(S, [h1[i], h2[i]])
        a[i], b[i] = x
        r = S @ x - [h1[i], h2[i]]
        res = max(res, float(np.max(np.abs(r)) / max(np.abs(S).max() * np.abs(x).max(), 1e-300)))
    hn = float(np.sqrt(np.sum(h1 ** 2 + h2 ** 2)))
    fn = float(np.sqrt(np.sum(a ** 2 + b ** 2)))
    norms = {"h": hn, "coeff_l2": fn, "ratio": fn / hn if hn > 0 else 0.0, "max_residual": res}
    if modes is None:
        modes = np.arange(h1.size)
    return ModulationCoeffs(Q, np.asarray(modes), a, b, spectrum, norms)


def modulation_norms(f: ModulationCoeffs, grid: PanelGrid, window: float | None = None) -> dict:
    """Discrete L² and H² norms of ``f`` on the cylinder (weighted ξ quadrature)."""
    d = f.derivatives(grid.x)
    sp = f.spectrum
    wx = sp._l2_weights()
    we = grid.w * window_profile(grid.x, window)
    def l2(v):
        return float(np.sqrt(wx @ (v ** 2) @ we))
    l2f = l2(d["f"])
    h2 = np.sqrt(sum(l2(d[k]) ** 2 for k in ("f", "e", "x", "ee", "xe", "xx")))
    return {"L2": l2f, "H2": float(h2)}


# ----------------------------------------------------------------------------
# inner residual and orthogonality closure


def inner_residual_scaled(f: ModulationCoeffs | None, sp, fb, spectrum, grid: PanelGrid):
    """``N_λ(v0(f)) / (λμ)²`` on the cylinder grid (θ nodes × η nodes).

    ``v0(f) = U(η + f) + 2 log[μ (1 + ∂η f)]`` in Fermi coordinates
    ``(s, t)`` with ``η = λμ(s) t`` and metric factor ``h = 1 + κ t`` (``t > 0``
    towards the outer boundary). All derivatives are analytic except the
    ξ-derivatives of the mode profiles and of ``μ, κ``, which are spectral.
    """
    eta = grid.x[None, :]
    n = spectrum.n
    s_th = spectrum.xi / spectrum.alpha
    mu = sp.amplitude * sp.b_minus * np.abs(fb.dpsi_theta) / (sp.a0 * sp.lam * sp.R)  # μ at θ nodes
    m = (sp.lam * mu)[:, None]
    kappa = fb.curvature_at(s_th)
    ds = lambda v: fou.diff_periodic(v) / spectrum.sigma
    nu = (ds(mu) / mu)[:, None]
    m2_over_m = (ds(ds(sp.lam * mu)) / (sp.lam * mu))[:, None]
    dnu = ds(ds(mu) / mu)[:, None]
    kap = kappa[:, None]
    dkap = ds(kappa)[:, None]
    alpha = spectrum.alpha
    if f is None:
        zero = np.zeros((n, grid.x.size))
        d = {k: zero for k in ("f", "e", "ee", "eee", "x", "xe", "xee", "xx", "xxe")}
    else:
        d = f.derivatives(grid.x)
    J = 1.0 + d["e"]
    _, U1, U2 = bubble_1d(eta + d["f"])
    G_e = U1 * J + 2.0 * d["ee"] / J
    # G_ηη + e^U J² with U'' = -e^U cancelled analytically
    core = U1 * d["ee"] + 2.0 * d["eee"] / J - 2.0 * d["ee"] ** 2 / J ** 2
    G_ee = U2 * J ** 2 + core
    G_x = U1 * d["x"] + 2.0 * d["xe"] / J
    G_xx = U2 * d["x"] ** 2 + U1 * d["xx"] + 2.0 * d["xxe"] / J - 2.0 * d["xe"] ** 2 / J ** 2
    G_xe = U2 * J * d["x"] + U1 * d["xe"] + 2.0 * d["xee"] / J - 2.0 * d["xe"] * d["ee"] / J ** 2
    t = eta / m
    u_s = alpha * G_x + nu * eta * G_e + 2.0 * nu
    u_ss = (alpha ** 2 * G_xx + 2.0 * alpha * nu * eta * G_xe + m2_over_m * eta * G_e
            + (nu * eta) ** 2 * G_ee + 2.0 * dnu)
    h = 1.0 + kap * t
    return core + kap * G_e / (h * m) + u_ss / (h ** 2 * m ** 2) - dkap * t * u_s / (h ** 3 * m ** 2)


@dataclass(frozen=True)
class ClosureHistory:
    """Projection norms per Picard iteration and the final modulation."""

    projections: list
    coeffs: ModulationCoeffs
    converged: bool
    iterations: int
    contraction: list


def orthogonality_closure(sp, fb, spectrum, Q: float = np.inf, window: float | None = None,
                          omega_star: float = 0.5, eps: float = 0.05, tol: float = 1e-8,
                          max_iter: int = 50, damping: float = 1.0,
                          rel_change_tol: float = 1e-10, T: float | None = None) -> ClosureHistory:
    """Damped Picard (chord) iteration driving the projected inner residual to zero.

    ``f_{n+1} = f_n - damping · M⁻¹ P[ρ N(v0(f_n))/(λμ)²]`` with ``M`` the
    windowed matrices ``Z_ρ - ω² W_ρ`` of each retained mode. The default
    window is ``log β``; much wider windows let the linearly growing duals
    dominate and the iteration diverges.
    """
    if window is None:
        window = sp.log_beta
    modes = retained_modes(spectrum, omega_star)
    T = T or max(30.0, 1.05 * window)
    grid = mode_grid(max(omega_star, 1.0), T)
    bank = build_fs_bank(spectrum, modes, grid, eps)
    shapes = modulation_shapes(Q, grid.x)
    mats = [projection_matrices(float(spectrum.omegas[j]), Q, _fs_for(bank, spectrum.omegas[j]),
                                shapes, window=window) for j in modes]
    Sinv = [np.linalg.inv(pm.system) for pm in mats]
    f = ModulationCoeffs(Q, modes, np.zeros(modes.size), np.zeros(modes.size), spectrum)
    history, ratios = [], []
    converged = False
    it = 0
    for it in range(max_iter + 1):
        N = inner_residual_scaled(f, sp, fb, spectrum, grid)
        h1, h2 = project_rhs(N, spectrum, bank, modes, window=window, grid=grid)
        pnorm = float(np.max(np.abs(np.concatenate([h1, h2]))))
        history.append(pnorm)
        if len(history) > 1 and history[-2] > 0:
            ratios.append(history[-1] / history[-2])
        if pnorm < tol:
            converged = True
            break
        if it == max_iter:
            break
        da = np.array([Si @ [x, y] for Si, x, y in zip(Sinv, h1, h2)])
        a_new = f.a - damping * da[:, 0]
        b_new = f.b - damping * da[:, 1]
        change = float(np.max(np.abs(np.concatenate([a_new - f.a, b_new - f.b]))))
        scale = max(float(np.max(np.abs(np.concatenate([a_new, b_new])))), 1e-300)
        f = ModulationCoeffs(Q, modes, a_new, b_new, spectrum)
        if change / scale < rel_change_tol:
            break
    f = ModulationCoeffs(Q, modes, f.a, f.b, spectrum, modulation_norms(f, grid, window))
    return ClosureHistory(history, f, converged, it, ratios)
