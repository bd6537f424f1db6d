"""Linear theory of the inner problem on the cylinder.

Mode operators ``L_ω = ∂η² + e^U - ω²``, their fundamental solutions, the
periodic Sturm-Liouville problem along the free boundary, and the
mode-by-mode cylinder solver.

Fundamental solutions are stored in the bounded form ``k± = e^{±ωη} φ±``:

* ``φ⁺`` solves ``φ'' + 2ωφ' + e^U φ = 0`` and tends to a constant at ``-∞``,
  so ``k⁺`` decays at ``-∞``;
* ``φ⁻`` solves ``φ'' - 2ωφ' + e^U φ = 0`` and tends to a constant at ``+∞``.

For ``ω > ε`` the constants are 1. For ``ω <= ε`` the normalisation is
``φ±'(0) = -2``, which gives ``k±_0 = U'`` and keeps
``l = (k⁺ - k⁻)/(2ω)`` regular, with ``l_0 = ηU' + 2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh, eigh_tridiagonal

from . import _fourier as fou
from ._panels import PanelGrid
from .errors import NumericsFailure, RequiresCompactSupport
from .profile import bubble_1d

T_DEFAULT = 30.0


def mode_grid(omega_max: float, T: float = T_DEFAULT, order: int = 16) -> PanelGrid:
    """Panel grid on ``[-T, T]`` fine enough for kernels ``exp(-ω|η|)`` up to ``omega_max``."""
    h = min(0.25, 2.5 / max(omega_max, 1e-12))
    return PanelGrid.symmetric(T, h, order)


def potential(eta):
    """``e^{U(η)} = 2 sech² η``."""
    return -bubble_1d(eta)[2]


# ----------------------------------------------------------------------------
# ground state


def ground_state(h: float = 0.01, T: float = 25.0):
    """Lowest eigenpair of ``-(∂η² + e^U)`` by second-order finite differences.

    Returns
    -------
    nu0 : float
        Lowest eigenvalue (approximately -1).
    eta : ndarray
        Interior grid.
    Z0 : ndarray
        Eigenfunction scaled to best match ``√2 sech η`` in least squares.
    nu1 : float
        Second eigenvalue (edge of the discretized continuous spectrum).
    """
    n = int(round(2 * T / h)) - 1
    eta = -T + h * np.arange(1, n + 1)
    diag = 2.0 / h ** 2 - potential(eta)
    off = -np.ones(n - 1) / h ** 2
    w, v = eigh_tridiagonal(diag, off, select="i", select_range=(0, 1))
    z = v[:, 0]
    ref = np.sqrt(2.0) / np.cosh(eta)
    z = z * (z @ ref) / (z @ z)
    return float(w[0]), eta, z, float(w[1])


# ----------------------------------------------------------------------------
# fundamental sets


def _integrate_phi(omega: float, sign: int, grid: PanelGrid, rtol: float = 1e-13):
    """Bounded factor ``φ`` of ``k = e^{sign ω η} φ``, unit limit at the decaying end."""
    T0 = grid.a if sign > 0 else grid.b
    x = grid.x if sign > 0 else grid.x[::-1]
    e2 = np.exp(-2.0 * abs(T0))
    c = -2.0 / (1.0 + omega)
    y0 = [1.0 + c * e2, (-2.0 * c * e2) * (-1.0 if sign > 0 else 1.0)]
    # φ'' = -2 sign ω φ' - e^U φ
    def rhs(t, y):
        return [y[1], -2.0 * sign * omega * y[1] - potential(t) * y[0]]

    sol = solve_ivp(rhs, (T0, -T0), y0, method="DOP853", t_eval=x, rtol=rtol,
                    atol=1e-15)
    if not sol.success or not np.all(np.isfinite(sol.y)):
        raise NumericsFailure(f"fundamental solution integration failed at omega={omega}")
    phi, dphi = sol.y
    if sign < 0:
        phi, dphi = phi[::-1], dphi[::-1]
    return phi, dphi


@dataclass(frozen=True)
class FundamentalSet:
    """Fundamental solutions of ``L_ω`` sampled on ``grid``.

    Attributes
    ----------
    omega : float
    branch : str
        ``"small"`` (``ω <= ε``, pair ``(l, k⁺)``) or ``"large"`` (pair ``(k⁺, k⁻)``).
    phi_plus, dphi_plus, phi_minus, dphi_minus : ndarray
        Bounded factors of ``k±`` and their derivatives.
    l, dl : ndarray or None
        Regular second solution on the small branch.
    wronskian : float
        ``W(l, k⁺)`` on the small branch, ``W(k⁺, k⁻)`` on the large branch,
        with ``W(f, g) = f'g - fg'``.
    wronskian_drift : float
        Relative variation of the sampled Wronskian over the grid.
    residual : float
        Max relative residual of ``L_ω`` applied to the samples.
    """

    omega: float
    eps: float
    branch: str
    grid: PanelGrid = field(repr=False)
    phi_plus: np.ndarray = field(repr=False)
    dphi_plus: np.ndarray = field(repr=False)
    phi_minus: np.ndarray = field(repr=False)
    dphi_minus: np.ndarray = field(repr=False)
    l: np.ndarray | None = field(repr=False)
    dl: np.ndarray | None = field(repr=False)
    wronskian: float = 0.0
    wronskian_drift: float = 0.0
    residual: float = 0.0

    @property
    def eta(self):
        return self.grid.x

    @property
    def k_plus(self):
        with np.errstate(over="ignore"):
            return np.exp(self.omega * self.eta) * self.phi_plus

    @property
    def k_minus(self):
        with np.errstate(over="ignore"):
            return np.exp(-self.omega * self.eta) * self.phi_minus

    @property
    def dk_plus(self):
        with np.errstate(over="ignore"):
            return np.exp(self.omega * self.eta) * (self.dphi_plus + self.omega * self.phi_plus)

    @property
    def dk_minus(self):
        with np.errstate(over="ignore"):
            return np.exp(-self.omega * self.eta) * (self.dphi_minus - self.omega * self.phi_minus)

    @property
    def duals(self):
        """The two functions used for orthogonality and projections."""
        if self.branch == "small":
            return self.k_plus, self.l
        return self.k_plus, self.k_minus


def _small_branch_l0(omega, grid, rtol):
    """``l(0) = φ⁺_ω(0)/ω`` (normalised); quadratic extrapolation for ``ω < 1e-3``."""
    def ratio(w):
        p, dp = _integrate_phi(w, +1, grid, rtol)
        p0 = grid.interp(p, 0.0)[0]
        dp0 = grid.interp(dp, 0.0)[0]
        return (p0 * (-2.0 / dp0)) / w

    if omega >= 1e-3:
        return ratio(omega)
    ws = 1e-3 * np.array([1.0, 1.5, 2.0, 2.5])
    vals = np.array([ratio(w) for w in ws])
    coef = np.polyfit(ws, vals, 2)
    return float(np.polyval(coef, omega))


def _even_solution(omega, l0, grid, rtol):
    """Even solution of ``L_ω y = 0`` with ``y(0) = l0``, ``y'(0) = 0``."""
    def rhs(t, y):
        return [y[1], (omega * omega - potential(t)) * y[0]]

    out = np.empty(grid.x.size)
    dout = np.empty(grid.x.size)
    pos = grid.x >= 0
    for mask, end in ((pos, grid.b), (~pos, grid.a)):
        xs = grid.x[mask]
        order = np.argsort(np.abs(xs))
        sol = solve_ivp(rhs, (0.0, end), [l0, 0.0], method="DOP853", t_eval=xs[order],
                        rtol=rtol, atol=1e-15)
        if not sol.success:
            raise NumericsFailure("even solution integration failed")
        tmp = np.empty(xs.size)
        tmpd = np.empty(xs.size)
        tmp[order] = sol.y[0]
        tmpd[order] = sol.y[1]
        out[mask] = tmp
        dout[mask] = tmpd
    return out, dout


def fundamental_set(omega: float, eps: float = 0.05, grid: PanelGrid | None = None,
                    T: float = T_DEFAULT, rtol: float = 1e-13) -> FundamentalSet:
    """Construct the fundamental set of ``L_ω`` by inward integration from ``±T``."""
    if omega < 0:
        raise ValueError("omega must be >= 0")
    grid = grid or mode_grid(max(omega, 1e-12), T)
    x = grid.x
    pp, dpp = _integrate_phi(omega, +1, grid, rtol)
    pm, dpm = _integrate_phi(omega, -1, grid, rtol)
    eU = potential(x)
    if omega <= eps:
        # normalise φ±'(0) = -2
        sp = -2.0 / grid.interp(dpp, 0.0)[0]
        sm = -2.0 / grid.interp(dpm, 0.0)[0]
        pp, dpp, pm, dpm = pp * sp, dpp * sp, pm * sm, dpm * sm
        if omega >= 1e-3:
            kp = np.exp(omega * x) * pp
            km = np.exp(-omega * x) * pm
            dkp = np.exp(omega * x) * (dpp + omega * pp)
            dkm = np.exp(-omega * x) * (dpm - omega * pm)
            l = (kp - km) / (2.0 * omega)
            dl = (dkp - dkm) / (2.0 * omega)
        else:
            l, dl = _even_solution(omega, _small_branch_l0(omega, grid, rtol), grid, rtol)
        kp = np.exp(omega * x) * pp
        dkp = np.exp(omega * x) * (dpp + omega * pp)
        Wv = dl * kp - l * dkp
        drift_ref = np.max(np.abs(l * dkp)) + np.max(np.abs(dl * kp))
        res = max(_residual(grid, l, dl, omega, eU), _residual_phi(grid, pp, dpp, omega, eU, +1),
                  _residual_phi(grid, pm, dpm, omega, eU, -1))
        W = float(np.median(Wv))
        drift = float(np.max(np.abs(Wv - W)) / max(abs(W), 1e-300))
        return FundamentalSet(omega, eps, "small", grid, pp, dpp, pm, dpm, l, dl, W, drift, res)
    # large branch: W(k⁺, k⁻) = e^0 [(φ⁺' + ωφ⁺)φ⁻ - φ⁺(φ⁻' - ωφ⁻)]
    Wv = (dpp + omega * pp) * pm - pp * (dpm - omega * pm)
    W = float(np.median(Wv))
    drift = float(np.max(np.abs(Wv - W)) / max(abs(W), 1e-300))
    res = max(_residual_phi(grid, pp, dpp, omega, eU, +1), _residual_phi(grid, pm, dpm, omega, eU, -1))
    return FundamentalSet(omega, eps, "large", grid, pp, dpp, pm, dpm, None, None, W, drift, res)


def _residual_phi(grid, phi, dphi, omega, eU, sign):
    """Relative residual of ``φ'' + 2 sign ω φ' + e^U φ = 0`` by panel differentiation."""
    d2 = grid.diff(dphi)
    r = d2 + 2.0 * sign * omega * dphi + eU * phi
    scale = np.max(np.abs(phi)) * (1.0 + omega) ** 2
    return float(np.max(np.abs(r)) / scale)


def _residual(grid, y, dy, omega, eU):
    r = grid.diff(dy) + (eU - omega * omega) * y
    return float(np.max(np.abs(r)) / (np.max(np.abs(y)) * (1.0 + omega) ** 2))


# ----------------------------------------------------------------------------
# mode solver


@dataclass(frozen=True)
class ModeSolve:
    """Output of :func:`solve_mode`.

    ``report`` holds the case label, orthogonality integrals, whether a kernel
    projection was applied, the operator residual and weighted norms.
    """

    phi: np.ndarray
    dphi: np.ndarray
    g_effective: np.ndarray
    report: dict


def classify(omega: float, theta: float, eps: float) -> str:
    """Case label ``i`` (ω > θ+ε), ``ii``, ``iii`` (|ω-θ| <= ε) or ``iv`` (ω <= ε)."""
    if omega <= eps:
        return "iv"
    if abs(omega - theta) <= eps:
        return "iii"
    if omega > theta + eps:
        return "i"
    return "ii"


def weighted_norm(grid: PanelGrid, f, theta: float, derivs=()) -> float:
    """Discrete ``L²_θ`` norm (or ``H^k_θ`` when derivatives are passed) with weight ``e^{θ|η|}``."""
    w = np.exp(2.0 * theta * np.abs(grid.x))
    tot = grid.integrate(w * np.asarray(f) ** 2)
    for d in derivs:
        tot += grid.integrate(w * np.asarray(d) ** 2)
    return float(np.sqrt(tot))


def _particular(fs: FundamentalSet, g):
    """Variation-of-parameters solution with the decaying pair (or ``(l, k⁺)``)."""
    grid, w = fs.grid, fs.omega
    if fs.branch == "large":
        # φ = -(1/W)[k⁺ ∫_η^∞ k⁻ g + k⁻ ∫_{-∞}^η k⁺ g], rescaled exponentials
        B = grid.cumulative(fs.phi_minus * g, w, "backward")
        F = grid.cumulative(fs.phi_plus * g, w, "forward")
        phi = -(fs.phi_plus * B + fs.phi_minus * F) / fs.wronskian
        dphi = -((fs.dphi_plus + w * fs.phi_plus) * B + (fs.dphi_minus - w * fs.phi_minus) * F) \
            / fs.wronskian
        return phi, dphi
    # small branch, pair (y1, y2) = (l, k⁺):
    # φ = -(1/W)[l ∫_η^∞ k⁺ g + k⁺ ∫_{-∞}^η l g]
    kp, dkp = fs.k_plus, fs.dk_plus
    B = grid.cumulative(kp * g, 0.0, "backward")
    F = grid.cumulative(fs.l * g, 0.0, "forward")
    phi = -(fs.l * B + kp * F) / fs.wronskian
    dphi = -(fs.dl * B + dkp * F) / fs.wronskian
    return phi, dphi


def solve_mode(omega: float, g, theta: float = 0.3, fs: FundamentalSet | None = None,
               eps: float = 0.05, orth_tol: float = 1e-10, tail_tol: float = 1e-12,
               grid: PanelGrid | None = None) -> ModeSolve:
    """Decaying solution of ``(∂η² + e^U - ω²) φ = g``.

    In cases ii-iv the right-hand side must be orthogonal to the two
    solutions that fail to decay. The orthogonality integrals are always
    measured; if they exceed ``orth_tol`` (relative) the part of ``g`` along
    ``sech² k`` is removed by an oblique projection and the report is flagged.

    Raises
    ------
    RequiresCompactSupport
        In the resonant band ``|ω - θ| <= ε`` when ``g`` is not negligible at the
        ends of the grid.
    NumericsFailure
        If the Wronskian vanishes (bound state at ``ω = 1``).
    """
    if fs is None:
        fs = fundamental_set(omega, eps, grid=grid)
    grid = fs.grid
    g = np.asarray(g(grid.x) if callable(g) else g, dtype=float)
    case = classify(omega, theta, eps)
    gscale = float(np.max(np.abs(g))) if g.size else 0.0
    report = {"omega": omega, "case": case, "branch": fs.branch, "projected": False}
    if gscale == 0.0:
        z = np.zeros_like(g)
        report.update(orthogonality=[0.0, 0.0], residual=0.0, norm_ratio=0.0)
        return ModeSolve(z, z, z, report)
    if case == "iii":
        edge = max(abs(g[0]), abs(g[-1]))
        if edge > tail_tol * gscale:
            raise RequiresCompactSupport(f"omega={omega} within eps of theta={theta}")
    if abs(fs.wronskian) < 1e-8 * (1.0 + omega):
        raise NumericsFailure(f"Wronskian vanishes at omega={omega} (bound state)")
    d1, d2 = fs.duals if case != "i" else (None, None)
    geff = g
    if case != "i":
        with np.errstate(over="ignore", invalid="ignore"):
            o = np.array([grid.integrate(d1 * g), grid.integrate(d2 * g)])
        norm_d = np.array([np.sqrt(grid.integrate(d1 ** 2 / np.cosh(grid.x) ** 2)),
                           np.sqrt(grid.integrate(d2 ** 2 / np.cosh(grid.x) ** 2))])
        rel = np.abs(o) / (norm_d * np.sqrt(grid.integrate(g ** 2)))
        report["orthogonality"] = o.tolist()
        report["orthogonality_relative"] = rel.tolist()
        if np.any(rel > orth_tol):
            s2 = 1.0 / np.cosh(grid.x) ** 2
            Z = [s2 * d1, s2 * d2]
            M = np.array([[grid.integrate(di * zj) for zj in Z] for di in (d1, d2)])
            c = np.linalg.solve(M, o)
            geff = g - c[0] * Z[0] - c[1] * Z[1]
            report["projected"] = True
            report["projection_coefficients"] = c.tolist()
    phi, dphi = _particular(fs, geff)
    eU = potential(grid.x)
    r = grid.diff(dphi) + (eU - omega * omega) * phi - geff
    report["residual_abs"] = float(np.max(np.abs(r)))
    report["residual"] = report["residual_abs"] / max(float(np.max(np.abs(geff))), 1e-300)
    n_phi = weighted_norm(grid, phi, theta, (dphi, grid.diff(dphi)))
    n_g = weighted_norm(grid, geff, theta)
    report["norm_phi_H2"] = n_phi
    report["norm_g_L2"] = n_g
    report["norm_ratio"] = n_phi / n_g if n_g > 0 else 0.0
    gap = abs(omega - theta)
    report["bound_scale"] = (1.0 / (1.0 + omega)) * (1.0 / max(gap, 1e-300) + 1.0 / (omega + theta))
    return ModeSolve(phi, dphi, geff, report)


# ----------------------------------------------------------------------------
# Sturm-Liouville spectrum along γ


def _fourier_diff_matrix(n: int) -> np.ndarray:
    """First-derivative matrix on ``n`` (odd) uniform points of ``[0, 2π)``."""
    if n % 2 == 0:
        raise ValueError("odd number of nodes required")
    j = np.arange(n)
    X = j[:, None] - j[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        D = 0.5 * (-1.0) ** X / np.sin(np.pi * X / n)
    D[X == 0] = 0.0
    return D


@dataclass(frozen=True)
class SLSpectrum:
    """Eigenpairs of ``p_α ∂ξ² y = -ω² y`` on the circle ``[0, α|γ|)``.

    Attributes
    ----------
    omegas : ndarray
        ``ω_{α,k}`` in nondecreasing order, one per eigenfunction (pairs for k >= 1).
    freq_index : ndarray
        ``0, 1, 1, 2, 2, ...``, the Weyl index of each eigenvalue.
    theta : ndarray
        Uniform image angles carrying the samples.
    xi : ndarray
        ``ξ = α s(θ)`` at those angles.
    eigenfunctions : ndarray
        ``(n_nodes, n_eig)`` samples, normalised in ``L²(dξ)``.
    sigma : ndarray
        ``ds/dθ = R/|ψ'|``.

    Notes
    -----
    The eigenfunctions are orthogonal for the weight ``|ψ'|²`` (that is
    ``p_α^{-1}``), which is what :meth:`project` uses. In plain ``L²(dξ)``
    they are orthogonal only when ``|ψ'|`` is constant.
    """

    alpha: float
    R: float
    length: float
    omegas: np.ndarray = field(repr=False)
    freq_index: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)
    xi: np.ndarray = field(repr=False)
    eigenfunctions: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.theta.size

    def _wprod_weights(self):
        # ∫ f g |ψ'|² dξ = α ∫ f g (R²/σ²) σ dθ
        return self.alpha * self.R ** 2 / self.sigma * (2 * np.pi / self.n)

    def _l2_weights(self):
        return self.alpha * self.sigma * (2 * np.pi / self.n)

    def weighted_gram(self) -> np.ndarray:
        Y = self.eigenfunctions
        return Y.T @ (self._wprod_weights()[:, None] * Y)

    def l2_gram(self) -> np.ndarray:
        Y = self.eigenfunctions
        return Y.T @ (self._l2_weights()[:, None] * Y)

    def project(self, f) -> np.ndarray:
        """Expansion coefficients of ``f`` (first axis = ξ nodes) in the eigenbasis."""
        Y = self.eigenfunctions
        w = self._wprod_weights()
        G = np.sum(Y * Y * w[:, None], axis=0)
        return (Y.T @ (w[:, None] * np.asarray(f).reshape(self.n, -1))) / G[:, None]

    def synthesize(self, coeffs) -> np.ndarray:
        return self.eigenfunctions @ np.asarray(coeffs).reshape(self.eigenfunctions.shape[1], -1)

    def apply_p_dxi2(self, f) -> np.ndarray:
        """``p_α ∂ξ² f`` on the θ nodes (first axis)."""
        D = _fourier_diff_matrix(self.n)
        s = self.sigma[:, None]
        f = np.asarray(f).reshape(self.n, -1)
        return (s ** 2 / self.R ** 2) / self.alpha ** 2 * ((D @ ((D @ f) / s)) / s)

    def weyl(self) -> np.ndarray:
        """Leading-order prediction ``k/(αR)``."""
        return self.freq_index / (self.alpha * self.R)

    def at_arclength(self, s) -> np.ndarray:
        """Eigenfunctions evaluated at arclength positions ``s``."""
        sv = np.mod(np.asarray(s, float), self.length)
        # θ(s) through the monotone table (ξ/α, θ), periodic extension
        s_nodes = self.xi / self.alpha
        th = np.interp(sv, np.concatenate([s_nodes, [self.length]]),
                       np.concatenate([self.theta, [2 * np.pi]]))
        for _ in range(30):
            s_of = _s_of_theta(self.sigma, th)
            ds = fou.eval_periodic(self.sigma, th)
            step = (s_of - sv) / ds
            th = th - step
            if np.max(np.abs(step)) < 1e-14:
                break
        return np.column_stack([fou.eval_periodic(self.eigenfunctions[:, j], th)
                                for j in range(self.eigenfunctions.shape[1])])


def _s_of_theta(sigma, th):
    mean, per = fou.antiderivative_periodic(sigma)
    return mean * th + fou.eval_periodic(per, th)


def sl_spectrum(fb, alpha: float, kmax: int | None = None, model=None) -> SLSpectrum:
    """Periodic Sturm-Liouville spectrum along γ at stretch factor ``α``.

    Discretised in the image angle θ with an odd Fourier differentiation matrix;
    ``kmax`` limits the returned frequencies (default: all resolved ones).
    """
    R = fb.R
    nd = np.abs(fb.dpsi_theta)
    n = nd.size
    if n % 2 == 0:
        raise ValueError("free boundary must be sampled at an odd number of nodes")
    sigma = R / nd
    D = _fourier_diff_matrix(n)
    A = D.T @ (D / sigma[:, None])
    A = 0.5 * (A + A.T)
    B = np.diag(1.0 / sigma)
    lam, V = eigh(A, B)
    lam = np.maximum(lam, 0.0)
    omt = np.sqrt(lam) / R
    om = omt / alpha
    freq = (np.arange(n) + 1) // 2
    if kmax is not None:
        if kmax < 1:
            raise ValueError("kmax must be >= 1")
        keep = freq <= kmax
        om, V, freq = om[keep], V[:, keep], freq[keep]
    om[0] = 0.0
    th = 2 * np.pi * np.arange(n) / n
    s_th = _s_of_theta(sigma, th)
    # L²(dξ) normalisation
    w = alpha * sigma * (2 * np.pi / n)
    V = V / np.sqrt(np.sum(V * V * w[:, None], axis=0))[None, :]
    # sign convention: first nonzero sample positive, constant mode positive
    sgn = np.sign(V[np.argmax(np.abs(V) > 1e-8, axis=0), np.arange(V.shape[1])])
    V = V * np.where(sgn == 0, 1.0, sgn)[None, :]
    return SLSpectrum(alpha=float(alpha), R=float(R), length=float(fb.length), omegas=om,
                      freq_index=freq, theta=th, xi=alpha * s_th, eigenfunctions=V,
                      sigma=sigma)


# ----------------------------------------------------------------------------
# cylinder


@dataclass(frozen=True)
class CylinderField:
    """Samples on the tensor grid (SL nodes in ξ) × (panel nodes in η)."""

    values: np.ndarray
    grid: PanelGrid = field(repr=False)
    theta: float = 0.3

    def weighted_norm(self, spectrum: SLSpectrum, theta: float | None = None) -> float:
        th = self.theta if theta is None else theta
        wx = spectrum._l2_weights()
        we = self.grid.w * np.exp(2.0 * th * np.abs(self.grid.x))
        return float(np.sqrt(wx @ (self.values ** 2) @ we))


def cylinder_operator(values, spectrum: SLSpectrum, grid: PanelGrid) -> np.ndarray:
    """Apply ``∂η² + e^U + p_α ∂ξ²`` to samples ``(n_xi, n_eta)``."""
    v = np.asarray(values, float)
    d2 = np.vstack([grid.diff(row, 2) for row in v])
    return d2 + potential(grid.x)[None, :] * v + spectrum.apply_p_dxi2(v)


def solve_cylinder(g: CylinderField, theta: float, spectrum: SLSpectrum, eps: float = 0.05,
                   fs_bank: dict | None = None, orth_tol: float = 1e-10):
    """Solve ``(∂η² + e^U + p_α ∂ξ²) φ = g`` mode by mode.

    Returns
    -------
    CylinderField
        The solution.
    list of dict
        Per-eigenfunction reports from :func:`solve_mode`.
    """
    grid = g.grid
    coeffs = spectrum.project(g.values)
    out = np.zeros_like(coeffs)
    reports = []
    fs_bank = {} if fs_bank is None else fs_bank
    for j, om in enumerate(spectrum.omegas):
        key = round(float(om), 14)
        if key not in fs_bank:
            fs_bank[key] = fundamental_set(float(om), eps, grid=grid)
        res = solve_mode(float(om), coeffs[j], theta, fs=fs_bank[key], eps=eps, orth_tol=orth_tol)
        out[j] = res.phi
        rep = dict(res.report)
        rep["index"] = j
        rep["k"] = int(spectrum.freq_index[j])
        reports.append(rep)
    phi = spectrum.synthesize(out)
    return CylinderField(phi, grid, theta), reports
