"""Mode-by-mode solution of the overdetermined inner/outer matching problem.

On the reference annulus we look for harmonic corrections ``w̃±`` on the two
sub-annuli and matching functions ``h1, h2`` on ``C_R`` such that, with the
Poisson pre-solve ``φ±`` absorbing the sources,

    w⁻ = 2 h1 + 2 h2,   ∂r w⁻ =  2 α h1   on r = R,
    w⁺ = 2 h1 - 2 h2,   ∂r w⁺ = -2 α h1   on r = R,

and ``w± = 0`` on the outer and inner circles, where ``w± = w̃± + φ±``.
Each Fourier mode gives a 6×6 linear system that reduces to a scalar
equation for ``h1``; it is singular exactly on the resonance sequence ``α_n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._cheb import cheb, clenshaw_curtis_weights
from .errors import NumericsFailure, ResonanceRejected, ResonantMode0, ResonantModeN
from .harmonic import AnnulusGrid

TWO_PI = 2.0 * np.pi
EPS = np.finfo(float).eps


# ----------------------------------------------------------------------------
# resonances


def resonance_sequence(model, N: int) -> np.ndarray:
    """``α_n = (n/R)(1 + qⁿ)/(1 - qⁿ)`` for ``n = 1..N``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    n = np.arange(1, N + 1, dtype=float)
    qn = model.q ** n
    return (n / model.R) * (1.0 + qn) / (1.0 - qn)


def mode0_resonance(model) -> float:
    """The value of α with ``α R log(R1/R2) = 2``."""
    return 2.0 / (model.R * np.log(model.R1 / model.R2))


def gap_threshold_index(model, N: int = 200) -> int:
    """First index ``n`` from which every gap ``α_{m+1} - α_m`` exceeds ``1/(4R)``."""
    a = resonance_sequence(model, N + 1)
    ok = np.diff(a) > 1.0 / (4.0 * model.R)
    bad = np.where(~ok)[0]
    return int(bad[-1] + 2) if bad.size else 1


def resonance_distance(alpha: float, model) -> float:
    """``min_n |α_n - α|`` over all ``n >= 1``."""
    n_max = int(np.ceil(alpha * model.R)) + 4
    a = resonance_sequence(model, max(n_max, 2))
    return float(np.min(np.abs(a - alpha)))


def admissible(alpha: float, model) -> bool:
    """True iff ``α > max(4R, 2/(-R log q))`` and ``α`` keeps a ``1/(4R)`` gap from every ``α_n``."""
    lower = max(4.0 * model.R, 2.0 / (-model.R * np.log(model.q)))
    if not alpha > lower:
        return False
    return resonance_distance(alpha, model) > 1.0 / (4.0 * model.R)


# ----------------------------------------------------------------------------
# per-mode systems


@dataclass(frozen=True)
class ModeRHS:
    """Boundary coefficients of ``φ⁻`` and ``φ⁺`` on ``C_R`` for mode ``n``."""

    n: int
    phi_minus_n: complex
    phi_plus_n: complex


@dataclass(frozen=True)
class ModeSolution:
    """Solution of one mode.

    ``w̃⁻_n(r) = a_minus rⁿ + b_minus r⁻ⁿ`` for ``n != 0`` and
    ``a_minus + b_minus log r`` for ``n = 0``; likewise on the plus side.
    """

    n: int
    h1n: complex
    h2n: complex
    a_minus: complex
    b_minus: complex
    a_plus: complex
    b_plus: complex
    reduced_coefficient: float
    residual: float

    @property
    def a_n_pm(self):
        return self.a_minus, self.a_plus

    @property
    def b_n_pm(self):
        return self.b_minus, self.b_plus


def mode_system(n: int, alpha: float, model):
    """Dense 6×6 system in unknowns ``(a⁻, b⁻, a⁺, b⁺, h1, h2)``.

    Returns ``(A, B)`` such that ``A x = B @ (φ⁻_n, φ⁺_n)``.
    """
    R, R1, R2 = model.R, model.R1, model.R2
    A = np.zeros((6, 6))
    B = np.zeros((6, 2))
    if n == 0:
        A[0, :2] = [1.0, np.log(R2)]
        A[1, :2] = [1.0, np.log(R)]
        A[1, 4:] = [-2.0, -2.0]
        B[1, 0] = -1.0
        A[2, 1] = 1.0 / R
        A[2, 4] = -2.0 * alpha
        A[3, 2:4] = [1.0, np.log(R1)]
        A[4, 2:4] = [1.0, np.log(R)]
        A[4, 4:] = [-2.0, 2.0]
        B[4, 1] = -1.0
        A[5, 3] = 1.0 / R
        A[5, 4] = 2.0 * alpha
    else:
        A[0, :2] = [R2 ** n, R2 ** (-n)]
        A[1, :2] = [R ** n, R ** (-n)]
        A[1, 4:] = [-2.0, -2.0]
        B[1, 0] = -1.0
        A[2, :2] = [n * R ** (n - 1), -n * R ** (-n - 1)]
        A[2, 4] = -2.0 * alpha
        A[3, 2:4] = [R1 ** n, R1 ** (-n)]
        A[4, 2:4] = [R ** n, R ** (-n)]
        A[4, 4:] = [-2.0, 2.0]
        B[4, 1] = -1.0
        A[5, 2:4] = [n * R ** (n - 1), -n * R ** (-n - 1)]
        A[5, 4] = 2.0 * alpha
    return A, B


def _residual(sol: ModeSolution, rhs: ModeRHS, alpha: float, model) -> float:
    """Relative residual of the six equations, row by row in scaled form."""
    n, R, R1, R2, q = abs(rhs.n), model.R, model.R1, model.R2, model.q
    pm, pp = rhs.phi_minus_n, rhs.phi_plus_n
    h1, h2 = sol.h1n, sol.h2n
    if n == 0:
        am, bm, ap, bp = sol.a_minus, sol.b_minus, sol.a_plus, sol.b_plus
        rows = [am + bm * np.log(R2), am + bm * np.log(R) - 2 * h1 - 2 * h2 + pm,
                bm / R - 2 * alpha * h1, ap + bp * np.log(R1),
                ap + bp * np.log(R) - 2 * h1 + 2 * h2 + pp, bp / R + 2 * alpha * h1]
        scale = [abs(am) + abs(bm * np.log(R2)), abs(am) + abs(bm * np.log(R)) + 2 * abs(h1)
                 + 2 * abs(h2) + abs(pm), abs(bm / R) + 2 * alpha * abs(h1),
                 abs(ap) + abs(bp * np.log(R1)), abs(ap) + abs(bp * np.log(R)) + 2 * abs(h1)
                 + 2 * abs(h2) + abs(pp), abs(bp / R) + 2 * alpha * abs(h1)]
    else:
        Am, Bm = sol.a_minus * R ** n, sol.b_minus * R ** (-n)
        Ap, Bp = sol.a_plus * R ** n, sol.b_plus * R ** (-n)
        s = np.sqrt(q) ** n
        rows = [Am * s + Bm / s if s > 1e-150 else Am * q ** n + Bm,
                Am + Bm - 2 * h1 - 2 * h2 + pm, (n / R) * (Am - Bm) - 2 * alpha * h1,
                Ap / s + Bp * s if s > 1e-150 else Ap + Bp * q ** n,
                Ap + Bp - 2 * h1 + 2 * h2 + pp, (n / R) * (Ap - Bp) + 2 * alpha * h1]
        if s <= 1e-150:
            scale = [abs(Am) * q ** n + abs(Bm), 0, 0, abs(Ap) + abs(Bp) * q ** n, 0, 0]
        else:
            scale = [abs(Am) * s + abs(Bm) / s, 0, 0, abs(Ap) / s + abs(Bp) * s, 0, 0]
        scale[1] = abs(Am) + abs(Bm) + 2 * abs(h1) + 2 * abs(h2) + abs(pm)
        scale[2] = (n / R) * (abs(Am) + abs(Bm)) + 2 * alpha * abs(h1)
        scale[4] = abs(Ap) + abs(Bp) + 2 * abs(h1) + 2 * abs(h2) + abs(pp)
        scale[5] = (n / R) * (abs(Ap) + abs(Bp)) + 2 * alpha * abs(h1)
    ref = max(max(scale), abs(pm) + abs(pp), 1e-300)
    return float(max(abs(x) for x in rows) / ref)


def solve_mode0(rhs: ModeRHS, alpha: float, model) -> ModeSolution:
    """Mode 0: ``h1 = (φ⁻ + φ⁺)/(2(αR log q + 2))``, ``b⁻ = 2αR h1``, ``b⁺ = -2αR h1``.

    Raises
    ------
    ResonantMode0
        If ``α R log(R1/R2) = 2`` to machine precision.
    """
    R, q = model.R, model.q
    pm, pp = rhs.phi_minus_n, rhs.phi_plus_n
    L = np.log(1.0 / q)
    c0 = 0.5 * alpha * R * L - 1.0
    if abs(c0) <= 8 * EPS * (1.0 + 0.5 * alpha * R * L):
        raise ResonantMode0(f"alpha R log(R1/R2) = 2 at alpha={alpha}")
    h1 = -(pm + pp) / (4.0 * c0)
    h2 = (pm - pp) / 4.0
    bm = 2.0 * alpha * R * h1
    bp = -2.0 * alpha * R * h1
    am = -bm * np.log(model.R2)
    ap = -bp * np.log(model.R1)
    sol = ModeSolution(0, h1, h2, am, bm, ap, bp, c0, 0.0)
    return _with_residual(sol, rhs, alpha, model)


def solve_mode_n(rhs: ModeRHS, alpha: float, model) -> ModeSolution:
    """Mode ``n >= 1`` via the reduced coefficient ``c = (αR/n)(1 - qⁿ)/(1 + qⁿ) - 1``.

    Raises
    ------
    ResonantModeN
        If ``c`` vanishes to machine precision (``α = α_n``).
    """
    n = abs(int(rhs.n))
    if n == 0:
        raise ValueError("use solve_mode0 for n = 0")
    R, q = model.R, model.q
    pm, pp = rhs.phi_minus_n, rhs.phi_plus_n
    qn = q ** n
    kappa = (alpha * R / n) * (1.0 - qn) / (1.0 + qn)
    c = kappa - 1.0
    if abs(c) <= 8 * EPS * (1.0 + kappa):
        raise ResonantModeN(f"alpha={alpha} is resonant for mode {n}")
    h1 = -(pm + pp) / (4.0 * c)
    h2 = (pm - pp) / 4.0
    g = 2.0 * alpha * h1 * R / (n * (1.0 + qn))
    Am, Bm = g, -g * qn
    Bp, Ap = g, -g * qn
    sol = ModeSolution(n, h1, h2, Am * R ** (-n), Bm * R ** n, Ap * R ** (-n), Bp * R ** n, c, 0.0)
    return _with_residual(sol, ModeRHS(n, pm, pp), alpha, model)


def _with_residual(sol, rhs, alpha, model):
    res = _residual(sol, rhs, alpha, model)
    return ModeSolution(sol.n, sol.h1n, sol.h2n, sol.a_minus, sol.b_minus, sol.a_plus,
                        sol.b_plus, sol.reduced_coefficient, res)


def solve_mode(rhs: ModeRHS, alpha: float, model) -> ModeSolution:
    return solve_mode0(rhs, alpha, model) if rhs.n == 0 else solve_mode_n(rhs, alpha, model)


def mode_condition_number(n: int, alpha: float, model) -> float:
    """Condition number of the dense 6×6 mode system."""
    A, _ = mode_system(n, alpha, model)
    return float(np.linalg.cond(A))


# ----------------------------------------------------------------------------
# Poisson pre-solve


def _radial_operators(grid: AnnulusGrid, side: str):
    r = grid.r_minus if side == "minus" else grid.r_plus
    D = grid.diff_r(side)
    return r, D


def poisson_presolve(g_plus, g_minus, model, grid: AnnulusGrid | None = None,
                     tol: float = 1e-10):
    """Solve ``Δφ± = g±`` with ``φ± = 0`` on ``r = R1, R2`` and ``∂r φ± = 0`` on ``r = R``.

    Fields have shape ``(n_theta, n_r)`` on ``grid``. Fourier in angle, Chebyshev
    collocation in radius.

    Raises
    ------
    NumericsFailure
        If the discrete residual exceeds ``tol`` (relative to ``max|g|``).
    """
    g_plus = np.asarray(g_plus, dtype=float)
    g_minus = np.asarray(g_minus, dtype=float)
    if grid is None:
        grid = AnnulusGrid.build(model, n_theta=g_plus.shape[0], n_r=g_plus.shape[1])
    out = {}
    worst = 0.0
    for side, g in (("plus", g_plus), ("minus", g_minus)):
        r, D = _radial_operators(grid, side)
        nt = grid.theta.size
        gh = np.fft.fft(g, axis=0)
        k = np.fft.fftfreq(nt, d=1.0 / nt)
        ph = np.zeros_like(gh)
        D2 = D @ D
        Rinv = np.diag(1.0 / r)
        base = D2 + Rinv @ D
        # boundary rows: Dirichlet at the outer circle of this side, Neumann at R
        i_dir = 0 if side == "minus" else r.size - 1
        i_neu = r.size - 1 if side == "minus" else 0
        for j, kk in enumerate(k):
            L = base - np.diag(kk * kk / r ** 2)
            rhs = gh[j].copy()
            L[i_dir] = 0.0
            L[i_dir, i_dir] = 1.0
            rhs[i_dir] = 0.0
            L[i_neu] = D[i_neu]
            rhs[i_neu] = 0.0
            try:
                ph[j] = np.linalg.solve(L, rhs)
            except np.linalg.LinAlgError as exc:
                raise NumericsFailure(f"Poisson solve failed for mode {kk}") from exc
        phi = np.real(np.fft.ifft(ph, axis=0))
        res = laplacian_polar(phi, grid, side) - g
        interior = np.ones(r.size, bool)
        interior[[i_dir, i_neu]] = False
        scale = max(float(np.max(np.abs(g))), 1.0)
        worst = max(worst, float(np.max(np.abs(res[:, interior]))) / scale)
        out[side] = phi
    if worst > tol:
        raise NumericsFailure(f"Poisson residual {worst:.2e} exceeds {tol:.1e}")
    return out["plus"], out["minus"]


def laplacian_polar(field_values, grid: AnnulusGrid, side: str) -> np.ndarray:
    """Spectral polar Laplacian of a field on one sub-annulus."""
    r, D = _radial_operators(grid, side)
    f = np.asarray(field_values, dtype=float)
    fr = f @ D.T
    frr = fr @ D.T
    nt = grid.theta.size
    k = np.fft.fftfreq(nt, d=1.0 / nt)
    ftt = np.real(np.fft.ifft(-(k ** 2)[:, None] * np.fft.fft(f, axis=0), axis=0))
    return frr + fr / r[None, :] + ftt / r[None, :] ** 2


# ----------------------------------------------------------------------------
# full matching solve


@dataclass(frozen=True)
class MatchResult:
    """Assembled matching solution on ``grid``.

    Attributes
    ----------
    h1, h2 : ndarray
        Values on the uniform angles of ``grid``.
    h1_modes, h2_modes : ndarray
        Complex Fourier coefficients (FFT order).
    w_plus, w_minus : ndarray
        ``w̃± + φ±`` on the two sub-annuli.
    boundary_error : float
        Max violation of the four conditions on ``r = R``.
    norm_report : dict
    """

    alpha: float
    grid: AnnulusGrid = field(repr=False)
    h1: np.ndarray = field(repr=False)
    h2: np.ndarray = field(repr=False)
    h1_modes: np.ndarray = field(repr=False)
    h2_modes: np.ndarray = field(repr=False)
    w_plus: np.ndarray = field(repr=False)
    w_minus: np.ndarray = field(repr=False)
    modes: list = field(repr=False)
    boundary_error: float = 0.0
    norm_report: dict = field(default_factory=dict)


def _l2_polar(f, grid, side):
    r = grid.r_minus if side == "minus" else grid.r_plus
    w = clenshaw_curtis_weights(r.size - 1, r[0], r[-1]) * r
    dth = TWO_PI / grid.theta.size
    return float(np.sqrt(np.sum((f ** 2) @ w) * dth))


def _h2_polar(f, grid, side):
    r, D = _radial_operators(grid, side)
    nt = grid.theta.size
    k = np.fft.fftfreq(nt, d=1.0 / nt)
    fh = np.fft.fft(f, axis=0)
    ft = np.real(np.fft.ifft(1j * k[:, None] * fh, axis=0))
    ftt = np.real(np.fft.ifft(-(k ** 2)[:, None] * fh, axis=0))
    fr = f @ D.T
    frr = fr @ D.T
    frt = ft @ D.T
    parts = [f, fr, ft / r, frr, frt / r - ft / r ** 2, ftt / r ** 2 + fr / r]
    return float(np.sqrt(sum(_l2_polar(p, grid, side) ** 2 for p in parts)))


def _h1_circle(values_modes, R):
    n = values_modes.size
    k = np.fft.fftfreq(n, d=1.0 / n)
    return float(np.sqrt(TWO_PI * R * np.sum(np.abs(values_modes) ** 2 * (1 + (k / R) ** 2))))


def matching_solve(g_plus, g_minus, alpha: float, model, n_modes: int | None = None,
                   grid: AnnulusGrid | None = None, allow_resonant: bool = False,
                   tol: float = 1e-9) -> MatchResult:
    """Solve the matching problem for sources ``g±`` at stretch factor ``α``.

    Parameters
    ----------
    n_modes : int, optional
        Highest retained angular mode; defaults to ``n_theta // 2``.
    allow_resonant : bool
        Solve even when ``α`` is not admissible; the report then carries
        the condition numbers of the mode systems.

    Raises
    ------
    ResonanceRejected
        If ``α`` is not admissible and ``allow_resonant`` is false.
    NumericsFailure
        If the assembled boundary conditions fail by more than ``tol``.
    """
    ok = admissible(alpha, model)
    if not ok and not allow_resonant:
        raise ResonanceRejected(f"alpha={alpha} is not admissible")
    g_plus = np.asarray(g_plus, dtype=float)
    g_minus = np.asarray(g_minus, dtype=float)
    if grid is None:
        grid = AnnulusGrid.build(model, n_theta=g_plus.shape[0], n_r=g_plus.shape[1])
    nt = grid.theta.size
    n_modes = nt // 2 if n_modes is None else int(n_modes)
    phi_p, phi_m = poisson_presolve(g_plus, g_minus, model, grid)
    # traces on r = R: last radial node on the minus side, first on the plus side
    cm = np.fft.fft(phi_m[:, -1]) / nt
    cp = np.fft.fft(phi_p[:, 0]) / nt
    k = np.fft.fftfreq(nt, d=1.0 / nt).astype(int)
    h1m = np.zeros(nt, complex)
    h2m = np.zeros(nt, complex)
    wm_hat = np.zeros((nt, grid.n_r), complex)
    wp_hat = np.zeros((nt, grid.n_r), complex)
    rm, rp = grid.r_minus, grid.r_plus
    sols = []
    conds = {}
    for j, kk in enumerate(k):
        if abs(kk) > n_modes or (nt % 2 == 0 and j == nt // 2):
            continue
        sol = solve_mode(ModeRHS(int(kk), cm[j], cp[j]), alpha, model)
        sols.append(sol)
        if not ok:
            conds[int(kk)] = mode_condition_number(abs(int(kk)), alpha, model)
        h1m[j], h2m[j] = sol.h1n, sol.h2n
        n = abs(int(kk))
        if n == 0:
            wm_hat[j] = sol.a_minus + sol.b_minus * np.log(rm)
            wp_hat[j] = sol.a_plus + sol.b_plus * np.log(rp)
        else:
            # evaluate a rⁿ + b r⁻ⁿ in the stable scaled form around R
            wm_hat[j] = sol.a_minus * model.R ** n * (rm / model.R) ** n \
                + sol.b_minus * model.R ** (-n) * (model.R / rm) ** n
            wp_hat[j] = sol.a_plus * model.R ** n * (rp / model.R) ** n \
                + sol.b_plus * model.R ** (-n) * (model.R / rp) ** n
    wt_m = np.real(np.fft.ifft(wm_hat * nt, axis=0))
    wt_p = np.real(np.fft.ifft(wp_hat * nt, axis=0))
    w_m = wt_m + phi_m
    w_p = wt_p + phi_p
    h1 = np.real(np.fft.ifft(h1m * nt))
    h2 = np.real(np.fft.ifft(h2m * nt))
    Dm, Dp = grid.diff_r("minus"), grid.diff_r("plus")
    err = max(
        np.max(np.abs(w_m[:, -1] - (2 * h1 + 2 * h2))),
        np.max(np.abs(w_p[:, 0] - (2 * h1 - 2 * h2))),
        np.max(np.abs((w_m @ Dm.T)[:, -1] - 2 * alpha * h1)),
        np.max(np.abs((w_p @ Dp.T)[:, 0] + 2 * alpha * h1)),
        np.max(np.abs(w_m[:, 0])), np.max(np.abs(w_p[:, -1])),
    )
    scale = max(1.0, float(np.max(np.abs(w_m))), float(np.max(np.abs(w_p))),
                alpha * float(np.max(np.abs(h1))))
    rel = float(err / scale)
    if rel > tol:
        raise NumericsFailure(f"matching boundary conditions violated: {rel:.2e}")
    out_norm = (_h1_circle(h1m, model.R) + _h1_circle(h2m, model.R)
                + _h2_polar(w_p, grid, "plus") + _h2_polar(w_m, grid, "minus"))
    in_norm = _l2_polar(g_plus, grid, "plus") + _l2_polar(g_minus, grid, "minus")
    report = {
        "h_H1": _h1_circle(h1m, model.R) + _h1_circle(h2m, model.R),
        "w_plus_H2": _h2_polar(w_p, grid, "plus"),
        "w_minus_H2": _h2_polar(w_m, grid, "minus"),
        "g_L2": in_norm,
        "stability_ratio": out_norm / in_norm if in_norm > 0 else 0.0,
        "max_mode_residual": max((s.residual for s in sols), default=0.0),
        "admissible": ok,
        "resonance_distance": resonance_distance(alpha, model),
    }
    if conds:
        report["condition_numbers"] = conds
    return MatchResult(alpha=alpha, grid=grid, h1=h1, h2=h2, h1_modes=h1m, h2_modes=h2m,
                       w_plus=w_p, w_minus=w_m, modes=sols, boundary_error=rel,
                       norm_report=report)
