"""Global approximation, discrete Liouville problem, Newton solver and radial oracle.

The boundary value problem ``Δu + λ² e^u = 0`` in Ω, ``u = 0`` on ∂Ω is
pulled back to the reference annulus, where it reads
``Δu + λ² w e^u = 0`` with the conformal weight ``w = |(ψ⁻¹)'|²``. In the
variables ``(ρ, θ) = (log r, θ)`` this is ``u_ρρ + u_θθ + λ² w r² e^u = 0``,
discretised with Gauss-Lobatto spectral elements in ``ρ`` and Fourier
collocation in ``θ`` in weak form, so the Jacobian ``-K + M diag(λ² w r² e^u)``
is exactly symmetric.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import linalg, optimize

from . import _fourier as fou
from ._cutoff import bump_between, smooth_step
from ._sem import SEMesh
from .errors import InnerRegionTooWide, NewtonFailed, NoSolution
from .harmonic import harmonic_measure
from .inner_linear import _fourier_diff_matrix
from .profile import inner_v0

log = logging.getLogger(__name__)


# ----------------------------------------------------------------------------
# constants


@dataclass(frozen=True)
class SolverConstants:
    """Cutoff multipliers and exponents of the construction.

    Construction enforces the structural orderings (``m_ρ > 2 m1``,
    ``m_ρ̄ > m2 > m_ρ``, ``0 < ε < θ``, ``θ + ε < ω*``, ``0 < σ < 1/4``).
    The quantitative inequalities of the asymptotic argument, which involve
    the Hopf constant and only matter for β → ∞, are reported by
    :meth:`violations` instead of refused.
    """

    M: float = 5.0
    m1: float = 3.0
    m_rho: float = 7.0
    m2: float = 8.0
    m_rho_bar: float = 9.0
    theta: float = 0.3
    eps: float = 0.05
    omega_star: float = 0.5
    sigma: float = 0.2
    K: float | None = None

    def __post_init__(self):
        pos = {k: getattr(self, k) for k in ("M", "m1", "m_rho", "m2", "m_rho_bar",
                                              "theta", "eps", "omega_star", "sigma")}
        bad = [k for k, v in pos.items() if not (np.isfinite(v) and v > 0)]
        if bad:
            raise ValueError(f"constants must be positive: {bad}")
        checks = [(self.m_rho > 2 * self.m1, "m_rho > 2 m1"),
                  (self.m2 > self.m_rho, "m2 > m_rho"),
                  (self.m_rho_bar > self.m2, "m_rho_bar > m2"),
                  (self.eps < self.theta, "eps < theta"),
                  (self.theta + self.eps < self.omega_star, "theta + eps < omega_star"),
                  (self.sigma < 0.25, "sigma < 1/4")]
        failed = [msg for ok, msg in checks if not ok]
        if failed:
            raise ValueError("constant chain violated: " + ", ".join(failed))
        if self.K is not None and not self.K > 4 * self.M:
            raise ValueError("K must exceed 4 M")

    @property
    def K_eff(self) -> float:
        """Support multiplier of the inner residual cutoff (default ``4M + 1``)."""
        return 4.0 * self.M + 1.0 if self.K is None else float(self.K)

    def violations(self, hopf: float | None = None) -> list[str]:
        """Quantitative inequalities of the asymptotic argument that fail."""
        M, m1, mr, m2, mrb = self.M, self.m1, self.m_rho, self.m2, self.m_rho_bar
        th, e, s = self.theta, self.eps, self.sigma
        out = []
        if hopf is not None and not m1 > 10.0 / (hopf * M):
            out.append(f"m1 > 10/(cM) = {10.0 / (hopf * M):.4g}")
        if not m2 > 6.0 / (M * th):
            out.append(f"m2 > 6/(M theta) = {6.0 / (M * th):.4g}")
        tb = min(1 - 1 / (m1 * M), (1 - s) / (4 * m1 * M), s / (mr * M))
        if not th < tb:
            out.append(f"theta < {tb:.4g}")
        eb = min(s / (mr * M) - th, 1 / (8 * mrb * M), (1 - s) / (M * m1) - 4 * th,
                 s / (4 * mrb * M) - th * mr / (4 * mrb), (1 - s) / (4 * mrb * M) - th * m1 / mrb)
        if not e < eb:
            out.append(f"eps < {eb:.4g}")
        return out

    def as_dict(self) -> dict:
        d = asdict(self)
        d["K"] = self.K_eff
        return d


def hopf_constant(model, fb=None) -> float:
    """``c = -max_γ ∂_ν H±``: smallest normal slope of the harmonic measures on γ.

    On the reference annulus ``|∂_r H±| = |b±|/R``; the physical slope picks up ``|ψ'|``.
    """
    hm = harmonic_measure(model)
    base = min(abs(hm.b_plus), abs(hm.b_minus)) / model.R
    if fb is None:
        return float(base)
    return float(base * np.min(fb.normal_deriv))


# ----------------------------------------------------------------------------
# exact radial family on a concentric annulus


def _x1_of_eps(eps, L):
    """Phase ``x1 = c log(R1/r0)`` fixed by ``u(R1) = u(R2) = 0``, with ``c = 1 + eps``.

    From ``cosh(cL - x1) = e^L cosh x1``; written in ``eps`` so both ends of the
    family (``eps -> 0`` minimal, ``eps -> ∞`` maximal) keep full precision.
    """
    eps = np.asarray(eps, dtype=float)
    return 0.5 * (np.log(-np.expm1(-eps * L)) + eps * L - np.log1p(-np.exp(-(2.0 + eps) * L)))


def _log_cosh(x):
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2 * ax)) - np.log(2.0)


def lambda_of_eps(eps, model) -> np.ndarray:
    """``λ`` of the exact radial solution with energy parameter ``c = 1 + eps``."""
    L = np.log(model.R1 / model.R2)
    x1 = _x1_of_eps(eps, L)
    return np.sqrt(2.0) * (1.0 + np.asarray(eps, float)) * np.exp(-_log_cosh(x1)) / model.R1


def lambda_of_c(c, model) -> np.ndarray:
    """``λ`` of the exact radial solution with energy parameter ``c > 1``."""
    return lambda_of_eps(np.asarray(c, float) - 1.0, model)


@dataclass(frozen=True)
class ExactRadial:
    """``u(r) = log(2c² sech²(c log(r/r0))) - 2 log(λ r)`` on ``[R2, R1]``."""

    c: float
    r0: float
    lam: float
    model: object = field(repr=False)
    label: str = ""
    log_r0: float | None = None

    def _x(self, r):
        lr0 = np.log(self.r0) if self.log_r0 is None else self.log_r0
        return self.c * (np.log(r) - lr0)

    def evaluate(self, r):
        """``(u, u_r, u_rr)`` in closed form."""
        r = np.asarray(r, dtype=float)
        x = self._x(r)
        ax = np.abs(x)
        lsech2 = 2.0 * (np.log(2.0) - ax - np.log1p(np.exp(-2 * ax)))
        u = np.log(2 * self.c ** 2) + lsech2 - 2.0 * np.log(self.lam * r)
        th = np.tanh(x)
        ur = (-2.0 * self.c * th - 2.0) / r
        urr = (-2.0 * self.c ** 2 * (1 - th ** 2) + 2.0 * self.c * th + 2.0) / r ** 2
        return u, ur, urr

    def __call__(self, r):
        return self.evaluate(r)[0]

    def log_source(self, r):
        """``log(λ² e^u) = u + 2 log λ`` without forming the large ``u``."""
        r = np.asarray(r, dtype=float)
        ax = np.abs(self._x(r))
        return (np.log(2 * self.c ** 2) + 2.0 * (np.log(2.0) - ax - np.log1p(np.exp(-2 * ax)))
                - 2.0 * np.log(r))

    def residual(self, r) -> np.ndarray:
        """``u'' + u'/r + λ² e^u`` by direct substitution (source in shifted-log form)."""
        u, ur, urr = self.evaluate(r)
        return urr + ur / np.asarray(r, float) + np.exp(self.log_source(r))

    def boundary_values(self):
        return float(self(self.model.R1)), float(self(self.model.R2))

    @property
    def x1(self) -> float:
        return float(self._x(self.model.R1))

    @property
    def x2(self) -> float:
        return float(self._x(self.model.R2))

    @property
    def mass(self) -> float:
        """``λ² ∫ e^u dx = 4πc [tanh x1 - tanh x2]``.

        Evaluated as ``4πc sinh(x1 - x2) / (cosh x1 cosh x2)`` in logs: on the
        minimal branch both ``tanh`` values sit at ``-1`` and the difference cancels.
        """
        d = self.x1 - self.x2
        log_sinh = d + np.log(-np.expm1(-2.0 * d)) - np.log(2.0)
        return float(4 * np.pi * self.c * np.exp(log_sinh - _log_cosh(self.x1) - _log_cosh(self.x2)))

    def mass_quadrature(self, n: int = 400) -> float:
        """Gauss-Legendre quadrature of the mass in ``log r`` on panels."""
        a, b = np.log(self.model.R2), np.log(self.model.R1)
        x, w = np.polynomial.legendre.leggauss(32)
        edges = np.linspace(a, b, n // 32 * 4 + 1)
        tot = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            rho = 0.5 * (hi - lo) * (x + 1) + lo
            r = np.exp(rho)
            tot += 0.5 * (hi - lo) * np.sum(w * np.exp(self.log_source(r)) * r ** 2)
        return float(2 * np.pi * tot)

    @property
    def normalized_mass(self) -> float:
        return self.mass / (2.0 * np.log(1.0 / self.lam))

    @property
    def peak_radius(self) -> float:
        """Maximiser of ``u`` (``tanh(c log(r/r0)) = -1/c``)."""
        lr0 = np.log(self.r0) if self.log_r0 is None else self.log_r0
        if self.c <= 1.0:
            return float("inf")
        return float(np.exp(lr0 - np.arctanh(1.0 / self.c) / self.c))

    @property
    def sup_u(self) -> float:
        rp = np.clip(self.peak_radius, self.model.R2, self.model.R1)
        return float(self(rp))

    @classmethod
    def from_eps(cls, eps: float, model, label: str = "", lam: float | None = None) -> "ExactRadial":
        """Member with ``c = 1 + eps``; ``lam`` overrides the closed-form ``λ``."""
        if not eps > 0.0:
            raise ValueError("c must exceed 1")
        c = 1.0 + eps
        L = np.log(model.R1 / model.R2)
        x1 = float(_x1_of_eps(eps, L))
        lr0 = np.log(model.R1) - x1 / c
        lam = float(lambda_of_eps(eps, model)) if lam is None else float(lam)
        return cls(float(c), float(np.exp(lr0)), lam, model, label, float(lr0))

    @classmethod
    def from_c(cls, c: float, model, label: str = "") -> "ExactRadial":
        return cls.from_eps(float(c) - 1.0, model, label)

    def as_row(self) -> dict:
        return {"lambda": self.lam, "c": self.c, "r0": self.r0, "mass": self.mass,
                "normalized_mass": self.normalized_mass, "sup_u": self.sup_u,
                "peak_radius": self.peak_radius}


def _log_lambda(le, model):
    return np.log(lambda_of_eps(np.exp(le), model))


def radial_fold(model):
    """``(c_fold, λ_max)``: the turning point of the radial family."""
    res = optimize.minimize_scalar(lambda le: -_log_lambda(le, model), bounds=(-12.0, 6.0),
                                   method="bounded", options={"xatol": 1e-12})
    return float(1.0 + np.exp(res.x)), float(lambda_of_eps(np.exp(res.x), model))


def _bracket_log_eps(lam, model, le_fold):
    g = lambda le: _log_lambda(le, model) - np.log(lam)
    lo = le_fold
    while g(lo) > 0:
        lo -= 2.0
    hi = le_fold
    while g(hi) > 0:
        hi += 1.0
    return g, lo, hi


def exact_radial(lam: float, model) -> list[ExactRadial]:
    """All radial solutions at ``λ``, sorted by ``sup u`` (minimal first).

    The boundary conditions reduce to one equation ``λ(c) = λ`` whose two
    roots straddle the fold of the family.

    Raises
    ------
    NoSolution
        If ``λ`` exceeds the fold value of the family.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    cf, lmax = radial_fold(model)
    if lam > lmax * (1 + 1e-14):
        raise NoSolution(f"lambda={lam} beyond the fold lambda_max={lmax:.15g}")
    lf = np.log(cf - 1.0)
    g, lo, hi = _bracket_log_eps(lam, model, lf)
    if abs(g(lf)) < 1e-14:
        return [ExactRadial.from_eps(cf - 1.0, model, "fold", lam)]
    roots = [optimize.brentq(g, lo, lf, xtol=1e-15, rtol=1e-15),
             optimize.brentq(g, lf, hi, xtol=1e-15, rtol=1e-15)]
    return [ExactRadial.from_eps(np.exp(x), model, lab, lam)
            for x, lab in zip(roots, ("minimal", "maximal"))]


@dataclass(frozen=True)
class RadialBranch:
    """Points of one radial branch ordered by the continuation parameter ``c``."""

    label: str
    points: list

    def table(self) -> list[dict]:
        return [p.as_row() for p in self.points]


def radial_branches(model, n_points: int = 40, lam_min: float = 1e-8):
    """Continue the radial family in ``c`` from the minimal end through the fold.

    Returns the ``minimal`` and ``maximal`` branches (each ending at the fold),
    sampled from ``λ = lam_min`` upward.
    """
    cf, _ = radial_fold(model)
    lf = np.log(cf - 1.0)
    g, lo, hi = _bracket_log_eps(lam_min, model, lf)
    le_lo = optimize.brentq(g, lo, lf, xtol=1e-15)
    le_hi = optimize.brentq(g, lf, hi, xtol=1e-15)
    mk = lambda les, lab: RadialBranch(lab, [ExactRadial.from_eps(np.exp(x), model, lab)
                                             for x in les])
    return (mk(np.linspace(le_lo, lf, n_points), "minimal"),
            mk(np.log(np.linspace(np.exp(le_hi), cf - 1.0, n_points)), "maximal"))


# ----------------------------------------------------------------------------
# non-radial branches bifurcating from the maximal radial branch


def _mode_operator(e: "ExactRadial", disc, k: int):
    """Top eigenpair of the mode-``k`` linearisation about ``e`` (interior nodes)."""
    ii = slice(1, disc.mesh.n - 1)
    Kr = disc.mesh.stiffness[ii, ii]
    Mr = disc.mesh.mass[ii]
    S = np.exp(e.log_source(disc.r) + 2.0 * disc.rho)[ii]
    w, V = linalg.eigh(-Kr + np.diag(Mr * (S - k * k)), np.diag(Mr))
    return w[-1], V[:, -1]


def bifurcation_point(model, k: int, disc=None) -> "ExactRadial":
    """Maximal-branch solution where the mode-``k`` linearisation becomes singular.

    On the maximal branch the top mode-``k`` eigenvalue behaves like
    ``c² − k²``, so the crossing is bracketed on ``c ∈ (c_fold, 4k)``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    disc = disc if disc is not None else PolarDiscretization(model, n_elements=10, order=10,
                                                             focus_width=0.1)
    cf, _ = radial_fold(model)
    f = lambda c: _mode_operator(ExactRadial.from_c(c, model), disc, k)[0]
    lo, hi = cf * (1 + 1e-9), 4.0 * k + 4.0
    if f(lo) * f(hi) > 0:
        raise NoSolution(f"no mode-{k} bifurcation on the maximal branch")
    c = optimize.brentq(f, lo, hi, xtol=1e-13)
    return ExactRadial.from_c(c, model, "maximal")


def _kfold_map(n_theta: int, k: int) -> np.ndarray:
    """Columns expand fields even and ``2π/k``-periodic in ``θ`` to all angles."""
    p = n_theta // k
    E = np.zeros((n_theta, p // 2 + 1))
    for j in range(n_theta):
        jj = j % p
        E[j, min(jj, p - jj)] = 1.0
    return E


@dataclass
class SolutionBranch:
    """A continued family of discrete solutions.

    ``points`` holds one row per accepted step with keys ``lambda``, ``sup_u``,
    ``mass``, ``concentration`` (fraction of the mass within ``radius`` of the
    ``k`` maxima), ``n_peaks`` and ``residual`` (dual norm).
    """

    label: str
    k: int
    points: list
    disc: "PolarDiscretization" = field(repr=False, default=None)
    fields: list = field(repr=False, default_factory=list)

    def table(self) -> list[dict]:
        return list(self.points)

    @property
    def lam_range(self) -> tuple[float, float]:
        lam = [p["lambda"] for p in self.points]
        return min(lam), max(lam)

    def at(self, lam: float) -> dict:
        """Row nearest to ``lam`` in ``log λ``."""
        return min(self.points, key=lambda p: abs(np.log(p["lambda"] / lam)))


def _peaks(u, disc, k, radius):
    top = u[1:-1].max(axis=0)
    n_peaks = int(np.sum((top > np.roll(top, 1)) & (top >= np.roll(top, -1))))
    j = np.argmax(top)
    i = np.argmax(u[:, j])
    z0 = disc.r[i] * np.exp(1j * (disc.theta[j] + 2 * np.pi * np.arange(k) / k))
    z = disc.points()
    near = np.min(np.abs(z[..., None] - z0), axis=-1) < radius
    dens = np.exp(disc.log_source(u, 1.0) - 2.0 * disc.rho[:, None]) * disc.r[:, None] ** 2
    frac = float(np.sum((disc.mass * dens)[near]) / np.sum(disc.mass * dens))
    return n_peaks, frac


def nonradial_branch(model, k: int = 3, lam_stop: float = 0.1, p: int = 13,
                     n_elements: int = 10, order: int = 10, ds: float = 0.5,
                     ds_max: float = 3.0, max_steps: int = 200, tol: float = 1e-10,
                     radius: float = 0.3, keep_fields: bool = False) -> SolutionBranch:
    """Pseudo-arclength continuation of the ``k``-fold branch off the maximal radial one.

    The unknowns are restricted to fields even in ``θ`` and ``2π/k``-periodic,
    which removes the rotational kernel; the weak residual and symmetric
    Jacobian are assembled directly in those coordinates. Continuation runs
    in ``(U, log λ)`` from the bifurcation point, starting along the critical
    mode ``φ(r) cos kθ``, until ``λ < lam_stop``.

    Along the branch the mass tends to ``8πk`` and concentrates around ``k``
    points, so the label is ``"intermediate"`` (its mass lies between the
    minimal and maximal radial branches).
    """
    nt = k * p
    disc = PolarDiscretization(model, n_theta=nt, n_elements=n_elements, order=order,
                               focus_width=0.1)
    e0 = bifurcation_point(model, k, disc.radial())
    _, phi = _mode_operator(e0, disc, k)

    ii = slice(1, disc.mesh.n - 1)
    nr = disc.mesh.n - 2
    E = _kfold_map(nt, k)
    q = E.shape[1]
    Kr = disc.mesh.stiffness[ii, ii]
    Mr = disc.mesh.mass[ii]
    # reduced operators: Eᵀ(A⊗B)E = A⊗(EᵀBE) for the θ factor
    Lred = -np.kron(Kr, disc.h_theta * (E.T @ E)) - np.kron(np.diag(Mr), E.T @ disc.K_theta @ E)
    pinv = np.linalg.pinv(E)

    def expand(U):
        u = np.zeros(disc.shape)
        u[ii] = U.reshape(nr, q) @ E.T
        return u

    def reduce(u):
        return (u[ii] @ pinv.T).ravel()

    def system(U, ll):
        u = expand(U)
        F = (disc.weak_residual(u, np.exp(ll))[ii] @ E).ravel()
        src = ((disc.mass * np.exp(disc.log_source(u, np.exp(ll))))[ii] @ E).ravel()
        J = Lred.copy()
        J[np.diag_indices_from(J)] += src
        return F, J, 2.0 * src, u

    def bordered(J, Fl, tU, tl):
        return np.block([[J, Fl[:, None]], [tU[None, :], np.array([[tl]])]])

    U = reduce(np.repeat(e0(disc.r)[:, None], nt, axis=1))
    ll = float(np.log(e0.lam))
    tU = reduce(np.outer(np.r_[0.0, phi, 0.0], np.cos(k * disc.theta)))
    tU /= np.linalg.norm(tU)
    tl = 0.0
    points, fields = [], []
    for _ in range(max_steps):
        Up, lp = U + ds * tU, ll + ds * tl
        ok = False
        for _it in range(12):
            F, J, Fl, u = system(Up, lp)
            rhs = -np.r_[F, (Up - U) @ tU + (lp - ll) * tl - ds]
            x = linalg.solve(bordered(J, Fl, tU, tl), rhs)
            Up += x[:-1]
            lp += x[-1]
            if np.abs(x).max() < tol:
                ok = True
                break
        if not ok:
            ds *= 0.5
            if ds < 1e-4:
                raise NewtonFailed("branch continuation stalled", last=expand(U))
            continue
        F, J, Fl, u = system(Up, lp)
        z = linalg.solve(bordered(J, Fl, tU, tl), np.r_[np.zeros(len(F)), 1.0])
        z /= np.linalg.norm(z)
        if z[:-1] @ tU + z[-1] * tl < 0:
            z = -z
        U, ll, tU, tl = Up, lp, z[:-1], z[-1]
        n_peaks, frac = _peaks(u, disc, k, radius)
        lam = float(np.exp(ll))
        points.append(dict(**{"lambda": lam}, sup_u=float(u.max()),
                           mass=disc.mass_integral(u, lam), concentration=frac,
                           n_peaks=n_peaks,
                           residual=disc.dual_norm(disc.weak_residual(u, lam)[ii])))
        if keep_fields:
            fields.append(u)
        if lam < lam_stop:
            break
        ds = min(ds * 1.3, ds_max)
    log.info("k=%d branch: %d points down to lambda=%.3e", k, len(points), points[-1]["lambda"])
    return SolutionBranch("intermediate", k, points, disc, fields)


# ----------------------------------------------------------------------------
# discretisation on the reference annulus


class PolarDiscretization:
    """Spectral elements in ``ρ = log r`` × Fourier in ``θ`` on ``R2 <= r <= R1``.

    Fields are arrays of shape ``(n_rho, n_theta)``; the first and last rows
    are Dirichlet nodes on the two boundary circles.

    Parameters
    ----------
    model : AnnulusModel
    mesh : SEMesh, optional
        Defaults to elements graded around ``log R`` on the scale ``focus_width``.
    n_theta : int
        Odd number of angles, or 1 for radial problems.
    weight : array_like, optional
        Conformal weight ``|(ψ⁻¹)'|²`` at the nodes (default 1).
    """

    def __init__(self, model, mesh: SEMesh | None = None, n_theta: int = 1, weight=None,
                 focus_width: float = 0.05, n_elements: int = 24, order: int = 14):
        if n_theta != 1 and n_theta % 2 == 0:
            raise ValueError("n_theta must be odd (or 1)")
        self.model = model
        a, b = np.log(model.R2), np.log(model.R1)
        if mesh is None:
            mesh = SEMesh.graded(a, b, np.log(model.R), focus_width, n_elements, order)
        if abs(mesh.edges[0] - a) > 1e-12 or abs(mesh.edges[-1] - b) > 1e-12:
            raise ValueError("mesh must span [log R2, log R1]")
        self.mesh = mesh
        self.n_theta = int(n_theta)
        self.rho = mesh.x
        self.r = np.exp(mesh.x)
        self.theta = 2 * np.pi * np.arange(self.n_theta) / self.n_theta
        self.h_theta = 2 * np.pi / self.n_theta
        if self.n_theta > 1:
            D = _fourier_diff_matrix(self.n_theta)
            self.K_theta = self.h_theta * (D.T @ D)
        else:
            self.K_theta = np.zeros((1, 1))
        w = np.ones(self.shape) if weight is None else np.broadcast_to(
            np.asarray(weight, float), self.shape).copy()
        if np.any(w <= 0):
            raise ValueError("conformal weight must be positive")
        self.weight = w
        self.log_weight = np.log(w)
        # per-node quadrature for ∫ · dρ dθ
        self.mass = mesh.mass[:, None] * np.full(self.n_theta, self.h_theta)[None, :]

    @property
    def shape(self):
        return (self.mesh.n, self.n_theta)

    @property
    def is_radial(self) -> bool:
        return self.n_theta == 1 or float(np.ptp(self.weight, axis=1).max()) <= 1e-13 * float(
            self.weight.max())

    def radial(self) -> "PolarDiscretization":
        """The ``n_theta = 1`` version (requires a radial weight)."""
        if not self.is_radial:
            raise ValueError("weight is not radial")
        return PolarDiscretization(self.model, self.mesh, 1, self.weight[:, :1])

    def with_theta(self, n_theta: int, weight=None) -> "PolarDiscretization":
        return PolarDiscretization(self.model, self.mesh, n_theta, weight)

    def points(self):
        """``ζ = r e^{iθ}`` at the nodes."""
        return self.r[:, None] * np.exp(1j * self.theta)[None, :]

    def log_source(self, u, lam: float):
        """``log(λ² w r² e^u)``: the weak-form source in log space."""
        return u + 2.0 * np.log(lam) + self.log_weight + 2.0 * self.rho[:, None]

    def laplacian_weak(self, u, dtype=float):
        """``-(K_ρ ⊗ M_θ + M_ρ ⊗ K_θ) u``."""
        u = np.asarray(u).astype(dtype)
        K = self.mesh.stiffness.astype(dtype)
        out = -(K @ u) * dtype(self.h_theta)
        if self.n_theta > 1:
            out -= self.mesh.mass.astype(dtype)[:, None] * (u @ self.K_theta.astype(dtype))
        return out

    def weak_residual(self, u, lam: float):
        """Galerkin residual, accumulated in extended precision.

        Double-precision accumulation of ``K u`` leaves a floor near
        ``1e-10`` for ``u`` of size 25; long double removes it.
        """
        ld = np.longdouble
        src = np.exp(self.log_source(np.asarray(u).astype(ld), lam))
        return np.asarray(self.laplacian_weak(u, ld) + self.mass.astype(ld) * src, dtype=float)

    def dual_norm(self, F) -> float:
        """Discrete ``H⁻¹`` norm ``(Fᵀ K⁻¹ F)^{1/2}`` of interior weak residual rows."""
        ii = slice(1, self.mesh.n - 1)
        F = np.asarray(F, float).reshape(self.mesh.n - 2, self.n_theta)
        Kr = self.mesh.stiffness[ii, ii]
        Mr = np.diag(self.mesh.mass[ii])
        lamk, Q = np.linalg.eigh(self.K_theta) if self.n_theta > 1 else (np.zeros(1), np.ones((1, 1)))
        G = F @ Q
        tot = 0.0
        for k in range(self.n_theta):
            A = self.h_theta * Kr + lamk[k] * Mr
            g = G[:, k]
            tot += float(g @ linalg.solve(A, g, assume_a="pos"))
        return float(np.sqrt(max(tot, 0.0)))

    def strong_residual(self, u, lam: float):
        """``Δu + λ² w e^u`` at the interior nodes (boundary rows set to 0)."""
        F = self.weak_residual(u, lam) / (self.mass * self.r[:, None] ** 2)
        F[0] = 0.0
        F[-1] = 0.0
        return F

    def jacobian(self, u, lam: float):
        """Dense symmetric Jacobian on the interior unknowns (row-major in ``(ρ, θ)``)."""
        ii = slice(1, self.mesh.n - 1)
        Kr = self.mesh.stiffness[ii, ii]
        Mr = self.mesh.mass[ii]
        nt = self.n_theta
        J = -np.kron(Kr, self.h_theta * np.eye(nt)) - np.kron(np.diag(Mr), self.K_theta)
        src = (self.mass * np.exp(self.log_source(u, lam)))[ii].ravel()
        J[np.diag_indices_from(J)] += src
        return J

    def integrate(self, f) -> float:
        """``∫ f dA`` over the annulus (``dA = r² dρ dθ``)."""
        return float(np.sum(self.mass * self.r[:, None] ** 2 * f))

    def mass_integral(self, u, lam: float) -> float:
        """``λ² ∫_Ω e^u dx`` computed in log space."""
        return self.integrate(np.exp(self.log_source(u, lam) - 2.0 * self.rho[:, None]))

    def sample(self, func):
        """Evaluate ``func(r, θ)`` on the node grid."""
        R, T = np.meshgrid(self.r, self.theta, indexing="ij")
        return np.asarray(func(R, T), float).reshape(self.shape)

    def interp(self, u, r, theta):
        """Spectral interpolation of a node field at polar points."""
        r = np.asarray(r, float)
        th = np.asarray(theta, float)
        col = self.mesh.interp(u, np.log(r).ravel())  # (m, n_theta)
        if self.n_theta == 1:
            return col[:, 0].reshape(r.shape)
        vals = np.array([fou.eval_periodic(col[i], th.ravel()[i:i + 1])[0] for i in range(col.shape[0])])
        return vals.reshape(r.shape)


def residual(u, lam: float, disc: PolarDiscretization, strip=None):
    """Residual ``Δu + λ² w e^u`` and its norms.

    Parameters
    ----------
    strip : tuple, optional
        ``(eta, density, theta)``: stretched normal coordinate at the nodes,
        the Jacobian ``dξ dη / dA``, and the weight exponent. Enables the
        weighted inner norm ``(∫ e^{2θ|η|} N_x² dξ dη)^{1/2}`` of the physical
        residual ``N_x = |ψ'|² (Δu + λ² w e^u)``, restricted to finite ``eta``.

    Returns
    -------
    (field, norms)
    """
    u = np.asarray(u, float)
    if not np.all(np.isfinite(u)):
        raise ValueError("u must be finite")
    F = disc.strong_residual(u, lam)
    area = disc.mass * disc.r[:, None] ** 2
    fac = 1.0
    W = disc.weak_residual(u, lam)[1:-1]
    norms = {"L2": float(np.sqrt(np.sum(area * F ** 2))), "sup": float(np.max(np.abs(F))),
             "dual": disc.dual_norm(W)}
    if strip is not None:
        eta, density, theta = strip
        Nx = F / disc.weight
        inside = np.isfinite(eta)
        wts = fac * area * density * np.exp(2 * theta * np.abs(np.where(inside, eta, 0.0)))
        norms["inner_weighted"] = float(np.sqrt(np.sum((wts * Nx ** 2)[inside])))
        norms["outer_L2"] = float(np.sqrt(fac * np.sum((area * (Nx ** 2) * disc.weight)[~inside])))
    return F, norms


@dataclass
class DiscreteSolution:
    """Converged Newton iterate on ``disc``."""

    u: np.ndarray
    lam: float
    residual_norm: float
    newton_iters: int
    disc: PolarDiscretization = field(repr=False)
    history: list = field(default_factory=list)

    def at(self, r, theta=0.0):
        return self.disc.interp(self.u, r, np.broadcast_to(theta, np.shape(r)))

    @property
    def mass(self) -> float:
        return self.disc.mass_integral(self.u, self.lam)


def _even_map(n_theta: int) -> np.ndarray:
    """Columns expand even data on ``θ_j, j <= n/2`` to all angles."""
    m = n_theta // 2 + 1
    E = np.zeros((n_theta, m))
    for j in range(n_theta):
        E[j, min(j, n_theta - j)] = 1.0
    return E


def newton_solve(initial, lam: float, disc: PolarDiscretization, tol: float = 1e-10,
                 max_iter: int = 30, symmetry: str | None = None,
                 min_step: float = 1.0 / 1024) -> DiscreteSolution:
    """Damped Newton with backtracking on the discretised problem.

    Convergence is declared when the discrete ``H⁻¹`` norm of the Galerkin
    residual (``residual(...)["dual"]``) is below ``tol``. The strong residual
    is reported but cannot reach ``1e-10``: nodal roundoff in ``u`` is
    amplified by the inverse squared node spacing.

    Parameters
    ----------
    symmetry : {None, "even"}
        ``"even"`` restricts to fields even in ``θ`` (removes the rotational
        kernel of non-radial solutions).

    Raises
    ------
    NewtonFailed
        When the line search fails or ``max_iter`` is reached; ``.last`` holds
        the final iterate.
    """
    if symmetry not in (None, "even"):
        raise ValueError("symmetry must be None or 'even'")
    u = np.array(np.broadcast_to(initial, disc.shape), dtype=float)
    if not np.all(np.isfinite(u)):
        raise ValueError("initial field must be finite")
    if disc.n_theta > 1 and disc.is_radial and \
            float(np.ptp(u, axis=1).max()) <= 1e-13 * max(1.0, float(np.abs(u).max())):
        rd = disc.radial()
        sol = newton_solve(u[:, :1], lam, rd, tol, max_iter, None, min_step)
        U = np.repeat(sol.u, disc.n_theta, axis=1)
        return DiscreteSolution(U, lam, residual(U, lam, disc)[1]["dual"], sol.newton_iters,
                                disc, sol.history)
    nt, nr = disc.n_theta, disc.mesh.n - 2
    ii = slice(1, disc.mesh.n - 1)
    Eb = None
    if symmetry == "even" and nt > 1:
        E = _even_map(nt)
        u = (u @ E) @ np.linalg.pinv(E)
        Eb = np.kron(np.eye(nr), E)
    Minv = 1.0 / disc.mass[ii].ravel()

    def evaluate(v):
        F = disc.weak_residual(v, lam)[ii].ravel()
        return F, float(np.sqrt(np.sum(F * F * Minv)))

    F, phi = evaluate(u)
    if not np.isfinite(phi):
        raise ValueError("initial residual is not finite")
    hist = []
    for it in range(max_iter + 1):
        dual = disc.dual_norm(F)
        hist.append({"iter": it, "dual": dual, "weak": phi})
        log.debug("newton %d dual %.3e", it, dual)
        if dual < tol:
            return DiscreteSolution(u, lam, dual, it, disc, hist)
        if it == max_iter:
            break
        J = disc.jacobian(u, lam)
        if Eb is not None:
            du = Eb @ linalg.solve(Eb.T @ J @ Eb, -(Eb.T @ F), assume_a="sym")
        else:
            du = linalg.solve(J, -F, assume_a="sym")
        step = 1.0
        while True:
            trial = u.copy()
            trial[ii] += step * du.reshape(nr, nt)
            Ft, pt = evaluate(trial)
            if np.isfinite(pt) and pt <= (1 - 1e-4 * step) * phi:
                break
            step *= 0.5
            if step < min_step:
                raise NewtonFailed(f"line search failed at iteration {it} (dual residual {dual:.3e})",
                                   last=DiscreteSolution(u, lam, dual, it, disc, hist))
        hist[-1]["step"] = step
        u, F, phi = trial, Ft, pt
    raise NewtonFailed(f"no convergence in {max_iter} iterations (dual residual {hist[-1]['dual']:.3e})",
                       last=DiscreteSolution(u, lam, hist[-1]["dual"], max_iter, disc, hist))


# ----------------------------------------------------------------------------
# Fermi coordinates and the global approximation


def fermi_coordinates(fb, x, max_dist: float | None = None, iters: int = 30):
    """Arclength ``s`` and signed distance ``t`` of points ``x`` relative to γ.

    ``t > 0`` on the side the normal points to (towards the outer boundary).
    Points farther than ``max_dist`` (default: chart width) get ``t = ±inf``.
    """
    x = np.asarray(x, dtype=complex)
    shape = x.shape
    xf = x.ravel()
    L = fb.length
    gam = fb.gamma
    dg = fou.diff_periodic(gam, period=L)
    d2g = fou.diff_periodic(gam, period=L, order=2)
    max_dist = fb.chart_width if max_dist is None else max_dist
    s = np.empty(xf.size)
    chunk = 2048
    for i in range(0, xf.size, chunk):
        d = np.abs(xf[i:i + chunk, None] - gam[None, :])
        s[i:i + chunk] = fb.s[np.argmin(d, axis=1)]
    for _ in range(iters):
        g = fou.eval_periodic(gam, np.mod(s, L), L)
        g1 = fou.eval_periodic(dg, np.mod(s, L), L)
        g2 = fou.eval_periodic(d2g, np.mod(s, L), L)
        diff = xf - g
        f = np.real(np.conj(diff) * g1)
        fp = np.real(np.conj(diff) * g2) - np.abs(g1) ** 2
        step = f / fp
        s = s - step
        if np.max(np.abs(step)) < 1e-14 * L:
            break
    s = np.mod(s, L)
    g = fou.eval_periodic(gam, s, L)
    g1 = fou.eval_periodic(dg, s, L)
    nrm = -1j * g1 / np.abs(g1)
    t = np.real(np.conj(xf - g) * nrm)
    dist = np.abs(xf - g)
    far = dist > max_dist
    t = np.where(far, np.copysign(np.inf, t), t)
    return s.reshape(shape), t.reshape(shape)


@dataclass
class GlobalApprox:
    """``u0 = χ0 v0 + χ0⁺ w0⁺ + χ0⁻ w0⁻`` and the perturbation slots ``u1, u2``.

    Fields live on ``disc``; ``s`` and ``t`` are the Fermi coordinates of the
    nodes (``t = ±inf`` outside the chart) and ``eta = λ μ(s) t``.
    """

    u0: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    cutoffs: dict
    constants: SolverConstants
    modulation: object
    disc: PolarDiscretization = field(repr=False)
    sp: object = field(repr=False)
    s: np.ndarray = field(repr=False)
    t: np.ndarray = field(repr=False)
    eta: np.ndarray = field(repr=False)
    report: dict = field(default_factory=dict)

    @property
    def u(self) -> np.ndarray:
        return self.u0 + self.u1 + self.u2

    def partition_defect(self) -> float:
        c = self.cutoffs
        d0 = np.abs(c["chi0"] + c["chi0_plus"] + c["chi0_minus"] - 1.0).max()
        d1 = np.abs(c["chi1"] + c["chi1_plus"] + c["chi1_minus"] - 1.0).max()
        return float(max(d0, d1))

    def strip(self, K: float | None = None, theta: float | None = None):
        """Inner-norm data for :func:`residual`: χ-weighted cylinder measure.

        ``χ`` is 1 on the support of ``χ0`` and vanishes for ``|η| >= K log β``.
        """
        sc = self.constants
        K = sc.K_eff if K is None else K
        theta = sc.theta if theta is None else theta
        sp = self.sp
        mu = sp.mu_at(self.s)
        kappa = self._fb.curvature_at(self.s)
        finite = np.isfinite(self.t)
        h = np.where(finite, 1.0 + kappa * np.where(finite, self.t, 0.0), 1.0)
        density = sp.alpha * sp.lam * mu * self.disc.weight / h
        outer = K * sp.log_beta
        inner = min(2.0 * sp.M * sp.log_beta, 0.5 * outer)
        chi = np.where(finite, bump_between(np.where(finite, self.eta, 0.0), inner, outer), 0.0)
        eta = np.where(chi > 0, self.eta, np.inf)
        return eta, density * chi ** 2, theta


def _cutoff_set(t, delta, sc: SolverConstants, side_plus):
    inside = np.isfinite(t)
    tt = np.where(inside, t, 0.0)
    def b(a, c):
        return np.where(inside, bump_between(tt, a * delta, c * delta), 0.0)
    out = {"chi0": b(1.0, 2.0), "chi1": b(0.5 * sc.m1, sc.m1), "rho": b(0.5 * sc.m_rho, sc.m_rho),
           "chi2": b(sc.m_rho, sc.m2), "rho_bar": b(sc.m2, sc.m_rho_bar)}
    for k in ("chi0", "chi1"):
        rest = 1.0 - out[k]
        out[k + "_plus"] = np.where(side_plus, rest, 0.0)
        out[k + "_minus"] = np.where(side_plus, 0.0, rest)
    far = 1.0 - b(0.5, 0.5 * sc.m1)
    out["rho_plus"] = np.where(side_plus, far, 0.0)
    out["rho_minus"] = np.where(side_plus, 0.0, far)
    return out


def assemble_u0(sp, oa, f, sc: SolverConstants, disc: PolarDiscretization, fb, cmap=None,
                strict: bool = False) -> GlobalApprox:
    """Glue the inner profile and the outer fields with the cutoffs of ``t/δ_λ``.

    Parameters
    ----------
    f : ModulationCoeffs or None
    cmap : ConformalMap, optional
        Needed for non-identity geometries (node positions ``ψ⁻¹(ζ)``).
    strict : bool
        Also require the widest inner cutoff ``2 m2 δ`` to fit in the chart.

    Raises
    ------
    InnerRegionTooWide
        When the support ``2δ`` of ``χ0`` (or ``2 m2 δ`` if ``strict``) exceeds
        the Fermi chart width.
    """
    zeta = disc.points()
    x = zeta if cmap is None or cmap.is_identity else cmap.inverse(zeta)
    width = fb.chart_width
    dmax = float(np.max(sp.delta_at(fb.s)))
    need = 2.0 * (sc.m2 if strict else 1.0) * dmax
    if need > width:
        raise InnerRegionTooWide(f"inner support {need:.4g} exceeds chart width {width:.4g}")
    s, t = fermi_coordinates(fb, x, max_dist=width)
    side_plus = np.abs(zeta) >= disc.model.R
    # points beyond the chart: side from the annulus radius
    delta = np.where(np.isfinite(t), sp.delta_at(s), np.inf)
    cut = _cutoff_set(t, np.where(np.isfinite(delta), delta, 1.0), sc, side_plus)
    r, th = np.abs(zeta), np.mod(np.angle(zeta), 2 * np.pi)
    w_plus = np.where(side_plus, oa.w0("plus", np.where(side_plus, r, disc.model.R), th), 0.0)
    w_minus = np.where(side_plus, 0.0, oa.w0("minus", np.where(side_plus, disc.model.R, r), th))
    u0 = cut["chi0_plus"] * w_plus + cut["chi0_minus"] * w_minus
    act = cut["chi0"] > 0
    if np.any(act):
        v0 = inner_v0(s[act], t[act], f, sp)
        u0[act] += cut["chi0"][act] * v0
    # Dirichlet rows: exact zero on the boundary circles
    u0[0] = 0.0
    u0[-1] = 0.0
    mu = sp.mu_at(s)
    eta = np.where(np.isfinite(t), sp.lam * mu * np.where(np.isfinite(t), t, 0.0), np.copysign(np.inf, t))
    clip = {k: float(m * dmax) for k, m in (("chi2", 2 * sc.m2), ("rho_bar", sc.m_rho_bar))}
    report = {"chart_width": width, "delta_max": dmax, "support_chi0": 2 * dmax,
              "clipped_supports": {k: v for k, v in clip.items() if v > width},
              "violations": sc.violations(hopf_constant(disc.model, fb))}
    ga = GlobalApprox(u0=u0, u1=np.zeros_like(u0), u2=np.zeros_like(u0), cutoffs=cut,
                      constants=sc, modulation=f, disc=disc, sp=sp, s=s, t=t, eta=eta,
                      report=report)
    ga._fb = fb
    return ga


# ----------------------------------------------------------------------------
# validation of the blow-up statements


def compact_shells(model, inner: float = 0.25, outer: float = 0.75):
    """Radii of fixed compact annuli ``K⁻ ⊂ Ω⁻`` and ``K⁺ ⊂ Ω⁺`` (log-proportional)."""
    lr2, lr, lr1 = np.log(model.R2), np.log(model.R), np.log(model.R1)
    km = np.exp(lr2 + np.array([inner, outer]) * (lr - lr2))
    kp = np.exp(lr + np.array([1 - outer, 1 - inner]) * (lr1 - lr))
    return km, kp


def limit_mass(model) -> float:
    """``4π / log √(R1/R2)``."""
    return float(4 * np.pi / np.log(np.sqrt(model.R1 / model.R2)))


def _fit(x, y):
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    yhat = A @ coef
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((y - yhat) ** 2)) / ss if ss > 0 else 1.0
    return float(coef[0]), float(coef[1]), r2


def _monotone(v, decreasing=True):
    d = np.diff(np.asarray(v, float))
    return bool(np.all(d < 0) if decreasing else np.all(d > 0))


def validate_theorem(lambda_list, model, cmap=None, n_profile: int = 201, **newton_opts) -> dict:
    """Finite-λ trend of the maximal family towards the blow-up limits.

    For the concentric annulus (``cmap`` None or identity) the exact radial
    maximal solution is used; otherwise each λ is solved by Newton seeded at
    the asymptotic approximation (see :func:`maximal_solution`).

    Returns a dictionary with per-λ rows (``lambda, beta, normalized_mass,
    mass_rel_error, profile_defect, r_peak, r_peak_error``) and trend flags.
    """
    lams = sorted((float(x) for x in lambda_list), reverse=True)
    if len(lams) == 0:
        raise ValueError("empty lambda list")
    from .profile import beta_of
    hm = harmonic_measure(model)
    km, kp = compact_shells(model)
    rm = np.linspace(km[0], km[1], n_profile)
    rp = np.linspace(kp[0], kp[1], n_profile)
    limit = limit_mass(model)
    concentric = cmap is None or cmap.is_identity or getattr(cmap, "_concentric", False)
    rows = []
    for lam in lams:
        if concentric:
            sol = exact_radial(lam, model)[-1]
            u_m, u_p = sol(rm), sol(rp)
            mass, rpk = sol.mass, sol.peak_radius
        else:
            sol = maximal_solution(lam, model, cmap, **newton_opts)
            th = sol.disc.theta
            u_m = sol.disc.interp(sol.u, *np.meshgrid(rm, th, indexing="ij"))
            u_p = sol.disc.interp(sol.u, *np.meshgrid(rp, th, indexing="ij"))
            mass = sol.mass
            rr = np.linspace(model.R2, model.R1, 2001)
            prof = sol.disc.mesh.interp(sol.u.mean(axis=1), np.log(rr))
            rpk = float(rr[np.argmax(prof)])
        scale = 2.0 * np.log(1.0 / lam)
        defect = max(float(np.max(np.abs(u_m / scale - hm.H_minus(rm[:, None] if np.ndim(u_m) > 1 else rm)))),
                     float(np.max(np.abs(u_p / scale - hm.H_plus(rp[:, None] if np.ndim(u_p) > 1 else rp)))))
        rows.append({"lambda": lam, "beta": beta_of(lam), "normalized_mass": mass / scale,
                     "mass_rel_error": (mass / scale - limit) / limit, "profile_defect": defect,
                     "r_peak": rpk, "r_peak_error": abs(rpk - model.R)})
    nm = [r["normalized_mass"] for r in rows]
    err = [abs(r["mass_rel_error"]) for r in rows]
    trends = {"mass_monotone_towards_limit": _monotone(err),
              "profile_defect_monotone": _monotone([r["profile_defect"] for r in rows]),
              "r_peak_error_monotone": _monotone([r["r_peak_error"] for r in rows])}
    if len(rows) >= 2:
        b = np.log([r["beta"] for r in rows])
        trends["mass_error_vs_beta_slope"] = _fit(b, np.log(err))[0]
        trends["profile_defect_vs_beta_slope"] = _fit(b, np.log([r["profile_defect"] for r in rows]))[0]
    return {"limit_mass": limit, "model": model.as_dict(), "rows": rows, "trends": trends,
            "normalized_mass": nm}


def maximal_solution(lam: float, model, cmap, constants: SolverConstants | None = None,
                     n_theta: int = 33, n_elements: int = 16, order: int = 12,
                     tol: float = 1e-10, fb=None) -> DiscreteSolution:
    """Newton solve of the pulled-back problem seeded by the asymptotic approximation."""
    from .geometry import free_boundary
    from .harmonic import outer_w0
    from .profile import scaling_params
    sc = constants or SolverConstants(M=1.0)
    fb = fb or free_boundary(cmap)
    sp = scaling_params(lam, fb, model, M=sc.M)
    oa = outer_w0(model, sp, fb)
    width = float(np.clip(1.0 / (sp.lam * np.min(sp.mu)), 0.02, 0.2))
    disc0 = PolarDiscretization(model, n_theta=n_theta, n_elements=n_elements, order=order,
                                focus_width=width)
    zeta = disc0.points()
    w = np.abs(cmap.inverse_derivative(zeta)) ** 2 if not cmap.is_identity else None
    disc = PolarDiscretization(model, disc0.mesh, n_theta, w)
    ga = assemble_u0(sp, oa, None, sc, disc, fb, cmap)
    return newton_solve(ga.u0, lam, disc, tol=tol)


def residual_scaling_study(lambda_list, sc: SolverConstants, model=None, cmap=None, fb=None,
                           n_elements: int = 48, order: int = 12, n_theta: int = 1) -> dict:
    """Inner and outer residual norms of ``u0`` across λ with power-law fits in β.

    The inner norm is the cylinder norm ``‖χ N(u0)‖_{L²_θ}``; the outer norm is
    the plain L² norm of ``N(u0)`` where ``χ0 = 0``. The fit regresses
    ``log(inner / log⁴β)`` on ``log β`` and compares with ``3/2 + θK``.
    """
    from .geometry import AnnulusModel, ConformalMap, free_boundary
    from .harmonic import outer_w0
    from .profile import scaling_params
    lams = sorted((float(x) for x in lambda_list), reverse=True)
    if len(lams) < 4 or np.log10(lams[0] / lams[-1]) < 2:
        raise ValueError("need at least 4 lambda values spanning 2 decades")
    model = model or AnnulusModel(2.0, 0.5)
    cmap = cmap or ConformalMap.identity(model)
    fb = fb or free_boundary(cmap)
    rows = []
    for lam in lams:
        sp = scaling_params(lam, fb, model, M=sc.M)
        oa = outer_w0(model, sp, fb)
        width = float(np.clip(1.0 / (sp.lam * np.min(sp.mu)), 0.01, 0.2))
        disc = PolarDiscretization(model, n_theta=n_theta, n_elements=n_elements, order=order,
                                   focus_width=width)
        if not cmap.is_identity:
            disc = PolarDiscretization(model, disc.mesh, n_theta,
                                       np.abs(cmap.inverse_derivative(disc.points())) ** 2)
        ga = assemble_u0(sp, oa, None, sc, disc, fb, cmap)
        F, nrm = residual(ga.u0, lam, disc, strip=ga.strip())
        # where χ0 = 0, u0 = w0± is harmonic, so N(u0) = λ² e^{w0} exactly
        outside = ga.cutoffs["chi0"] == 0.0
        area = disc.mass * disc.r[:, None] ** 2
        Nx = np.exp(disc.log_source(ga.u0, lam) - 2.0 * disc.rho[:, None] - disc.log_weight)
        outer = float(np.sqrt(np.sum((area * disc.weight * Nx ** 2)[outside])))
        rows.append({"lambda": lam, "beta": sp.beta, "inner": nrm["inner_weighted"],
                     "outer": outer, "ratio": outer / nrm["inner_weighted"]})
    b = np.array([r["beta"] for r in rows])
    inner = np.array([r["inner"] for r in rows])
    slope, icpt, r2 = _fit(np.log(b), np.log(inner / np.log(b) ** 4))
    pred = 1.5 + sc.theta * sc.K_eff
    oslope = _fit(np.log(b), np.log(np.maximum([r["outer"] for r in rows], 1e-300)))[0]
    return {"rows": rows, "inner_exponent": slope, "inner_fit_r2": r2, "predicted_exponent": pred,
            "outer_exponent": oslope, "constants": sc.as_dict(),
            "outer_below_inner_1e10": bool(all(r["ratio"] < 1e-10 for r in rows))}
