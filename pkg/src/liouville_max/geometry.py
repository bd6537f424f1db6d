"""Doubly connected domains, their conformal map to an annulus and the free boundary.

The forward map is represented as ``ψ(z) = (z - z0) exp(F(z))`` where ``z0``
lies in the hole and ``F`` is a sum of a Taylor series about the outer centroid
and a Laurent tail about the inner centroid. ``ψ`` is analytic by construction;
only the boundary conditions ``|ψ| = R1`` (outer) and ``|ψ| = R2`` (inner) are
fitted, by linear least squares on ``log|ψ|``. The unknown ``log R2`` enters
linearly, so the modulus comes out of the same solve.

The absolute scale is fixed by taking ``R1`` equal to the logarithmic capacity
of the outer curve.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import shapely.geometry as sg

from . import _fourier as fou
from .errors import GeometryError, InvalidDomain, NumericsFailure

TWO_PI = 2.0 * np.pi


# ----------------------------------------------------------------------------
# curves and domains


@dataclass(frozen=True)
class BoundaryCurve:
    """Closed curve stored by trigonometric coefficients ``z(t) = Σ c_k e^{ikt}``.

    Use :meth:`from_points`, :meth:`from_fourier` or :meth:`circle` to build one.
    The stored parametrization is always positively oriented; the orientation
    of the input is kept in ``orientation``.
    """

    modes: np.ndarray
    coeffs: np.ndarray
    orientation: str = "positive"

    @classmethod
    def from_fourier(cls, entries) -> "BoundaryCurve":
        """Build from ``[[k, re, im], ...]``."""
        arr = np.asarray(entries, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise InvalidDomain("fourier entries must be [k, re, im] triples")
        k = arr[:, 0].astype(int)
        c = arr[:, 1] + 1j * arr[:, 2]
        return cls._oriented(k, c)

    @classmethod
    def from_points(cls, points) -> "BoundaryCurve":
        """Build from an ordered point list, assumed uniform in parameter."""
        p = np.asarray(points, dtype=float)
        if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 8:
            raise InvalidDomain("points must be an (n >= 8, 2) array")
        if np.allclose(p[0], p[-1]):
            p = p[:-1]
        z = p[:, 0] + 1j * p[:, 1]
        n = z.size
        c = np.fft.fft(z) / n
        k = np.fft.fftfreq(n, d=1.0 / n).astype(int)
        if n % 2 == 0:
            c[n // 2] = 0.0
        return cls._oriented(k, c)

    @classmethod
    def circle(cls, center=0.0 + 0.0j, radius: float = 1.0) -> "BoundaryCurve":
        return cls(np.array([0, 1]), np.array([complex(center), complex(radius)]))

    @classmethod
    def _oriented(cls, k, c):
        curve = cls(np.asarray(k), np.asarray(c, dtype=complex))
        if curve.signed_area() < 0:
            return cls(-curve.modes, curve.coeffs, orientation="negative")
        return curve

    def evaluate(self, t, derivative: int = 0) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        fac = (1j * self.modes) ** derivative
        return np.exp(1j * np.multiply.outer(t, self.modes)) @ (fac * self.coeffs)

    def sample(self, n: int) -> np.ndarray:
        return self.evaluate(TWO_PI * np.arange(n) / n)

    def signed_area(self) -> float:
        # area = (1/2) ∮ Im(conj z dz) = π Σ k |c_k|^2
        return float(np.pi * np.sum(self.modes * np.abs(self.coeffs) ** 2))

    def length(self, n: int = 1024) -> float:
        t = TWO_PI * np.arange(n) / n
        return float(np.mean(np.abs(self.evaluate(t, 1))) * TWO_PI)

    def polygon(self, n: int = 1024) -> sg.Polygon:
        z = self.sample(n)
        return sg.Polygon(np.column_stack([z.real, z.imag]))


@dataclass(frozen=True)
class DoublyConnectedDomain:
    """Region between an outer and an inner closed curve."""

    outer: BoundaryCurve
    inner: BoundaryCurve
    check_resolution: int = 1024

    def __post_init__(self):
        n = self.check_resolution
        po, pi = self.outer.polygon(n), self.inner.polygon(n)
        for name, p in (("outer", po), ("inner", pi)):
            if not p.exterior.is_simple or not p.is_valid:
                raise InvalidDomain(f"{name} curve is not simple")
            if p.area <= 1e-12:
                raise InvalidDomain(f"{name} curve encloses no area")
        if not po.contains(pi):
            raise InvalidDomain("inner curve is not enclosed by the outer curve")
        gap = po.exterior.distance(pi.exterior)
        if gap <= 1e-9 * np.sqrt(po.area):
            raise InvalidDomain("inner curve touches the outer curve")

    @classmethod
    def annulus(cls, R1: float, R2: float, center=0.0) -> "DoublyConnectedDomain":
        return cls(BoundaryCurve.circle(center, R1), BoundaryCurve.circle(center, R2))

    @cached_property
    def hole_point(self) -> complex:
        """A point in the bounded complement component (centroid when inside)."""
        pi = self.inner.polygon(self.check_resolution)
        c = pi.centroid
        if not pi.contains(c):
            c = pi.representative_point()
        zc = self.inner.coeffs[self.inner.modes == 0]
        if zc.size and pi.contains(sg.Point(zc[0].real, zc[0].imag)):
            return complex(zc[0])
        return complex(c.x, c.y)

    def contains(self, z) -> np.ndarray:
        z = np.atleast_1d(z)
        po = self.outer.polygon(self.check_resolution)
        pi = self.inner.polygon(self.check_resolution)
        dom = po.difference(pi)
        import shapely

        return shapely.contains_xy(dom, z.real, z.imag)


# ----------------------------------------------------------------------------
# annulus model and map


@dataclass(frozen=True)
class AnnulusModel:
    """Reference annulus ``R2 < |ζ| < R1`` with free-boundary radius ``R = sqrt(R1 R2)``."""

    R1: float
    R2: float
    scale_convention: str = "R1 = logarithmic capacity of the outer curve"

    def __post_init__(self):
        if not (self.R1 > self.R2 > 0):
            raise InvalidDomain("need R1 > R2 > 0")

    @property
    def R(self) -> float:
        return float(np.sqrt(self.R1 * self.R2))

    @property
    def q(self) -> float:
        return self.R2 / self.R1

    @property
    def flux(self) -> float:
        """Flux of the harmonic function equal to 0 and 1 on the two boundaries."""
        return TWO_PI / np.log(self.R1 / self.R2)

    def as_dict(self) -> dict:
        return {"R1": self.R1, "R2": self.R2, "R": self.R, "q": self.q, "flux": self.flux,
                "scale_convention": self.scale_convention}


@dataclass(frozen=True)
class _ForwardSeries:
    z0: complex
    c_out: complex
    rho_out: float
    c_in: complex
    rho_in: float
    pos: np.ndarray  # a_0..a_N
    neg: np.ndarray  # b_1..b_N

    def F(self, z, derivative: bool = False):
        z = np.asarray(z, dtype=complex)
        w = (z - self.c_out) / self.rho_out
        v = self.rho_in / (z - self.c_in)
        F = np.polynomial.polynomial.polyval(w, self.pos)
        F = F + v * np.polynomial.polynomial.polyval(v, self.neg)
        if not derivative:
            return F
        n_pos = np.arange(1, self.pos.size)
        dF = np.polynomial.polynomial.polyval(w, n_pos * self.pos[1:]) / self.rho_out
        n_neg = np.arange(1, self.neg.size + 1)
        # d/dz v^n = -n v^{n+1} / rho_in
        dF = dF - v * v * np.polynomial.polynomial.polyval(v, n_neg * self.neg) / self.rho_in
        return F, dF

    def psi(self, z):
        z = np.asarray(z, dtype=complex)
        return (z - self.z0) * np.exp(self.F(z))

    def dpsi(self, z):
        z = np.asarray(z, dtype=complex)
        F, dF = self.F(z, True)
        return np.exp(F) * (1.0 + (z - self.z0) * dF)


@dataclass(frozen=True)
class ConformalMap:
    """Conformal map ``ψ: Ω -> {R2 < |ζ| < R1}`` and its inverse.

    Attributes
    ----------
    model : AnnulusModel
    boundary_correspondence : dict
        ``{"outer": (t, s, theta), "inner": (t, s, theta)}`` with curve
        parameter, arclength and image angle at the collocation nodes.
    boundary_residual : float
        Max deviation of ``log|ψ|`` from ``log R1``/``log R2`` on a fine
        boundary sampling.
    """

    domain: DoublyConnectedDomain | None
    model: AnnulusModel
    _fwd: _ForwardSeries | None = field(repr=False)
    _inv_pos: np.ndarray | None = field(repr=False)
    _inv_neg: np.ndarray | None = field(repr=False)
    boundary_correspondence: dict = field(default_factory=dict, repr=False)
    boundary_residual: float = 0.0

    @classmethod
    def identity(cls, model: AnnulusModel) -> "ConformalMap":
        """Identity map of a centred annulus."""
        return cls(domain=None, model=model, _fwd=None, _inv_pos=None, _inv_neg=None)

    @property
    def is_identity(self) -> bool:
        return self._fwd is None

    def forward(self, z):
        if self.is_identity:
            return np.asarray(z, dtype=complex)
        return self._fwd.psi(z)

    def derivative(self, z):
        if self.is_identity:
            return np.ones(np.shape(z), dtype=complex)
        return self._fwd.dpsi(z)

    def _inverse_guess(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        a = zeta / self.model.R1
        b = self.model.R2 / zeta
        P = np.polynomial.polynomial.polyval
        return P(a, self._inv_pos) + b * P(b, self._inv_neg)

    def inverse(self, zeta, newton_steps: int = 8, tol: float = 1e-15):
        """``ψ^{-1}``: Laurent guess refined by Newton on ``ψ(z) = ζ``."""
        if self.is_identity:
            return np.asarray(zeta, dtype=complex)
        z = self._inverse_guess(zeta)
        for _ in range(newton_steps):
            dz = (self._fwd.psi(z) - zeta) / self._fwd.dpsi(z)
            z = z - dz
            if np.max(np.abs(dz), initial=0.0) < tol * max(1.0, np.max(np.abs(z))):
                break
        return z

    def inverse_derivative(self, zeta):
        """``(ψ^{-1})'(ζ) = 1/ψ'(ψ^{-1}(ζ))``."""
        return 1.0 / self.derivative(self.inverse(zeta))

    def cauchy_riemann_residual(self, z, h: float = 1e-3) -> float:
        """Max of ``|∂ψ/∂z̄|`` from fourth-order central differences."""
        z = np.asarray(z, dtype=complex)

        def d(dirn):
            f = self.forward
            return (-f(z + 2 * h * dirn) + 8 * f(z + h * dirn) - 8 * f(z - h * dirn)
                    + f(z - 2 * h * dirn)) / (12 * h)

        dzbar = 0.5 * (d(1.0) + 1j * d(1j))
        return float(np.max(np.abs(dzbar)))

    def round_trip_error(self, z) -> float:
        z = np.asarray(z, dtype=complex)
        return float(np.max(np.abs(self.inverse(self.forward(z)) - z)))


# ----------------------------------------------------------------------------
# construction


def _log_capacity(curve: BoundaryCurve, z0: complex, n_pts: int, n_terms: int) -> float:
    """Log capacity via ``log|z - z0| = Re G`` on the curve, ``G`` analytic outside."""
    t = TWO_PI * np.arange(n_pts) / n_pts
    z = curve.evaluate(t)
    c = complex(np.mean(z))
    rho = float(np.min(np.abs(z - c)))
    v = rho / (z - c)
    cols = [np.ones(n_pts)]
    for n in range(1, n_terms + 1):
        vn = v ** n
        cols += [vn.real, -vn.imag]
    A = np.column_stack(cols)
    rhs = np.log(np.abs(z - z0))
    sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    # Green function log|z - z0| - Re G(z) ~ log|z| - sol[0] at infinity
    return float(sol[0])


def _fit_forward(domain: DoublyConnectedDomain, n_pts: int, n_terms: int):
    z0 = domain.hole_point
    t = TWO_PI * np.arange(n_pts) / n_pts
    zo = domain.outer.evaluate(t)
    zi = domain.inner.evaluate(t)
    c_out = complex(np.mean(zo))
    rho_out = float(np.max(np.abs(zo - c_out)))
    c_in = complex(np.mean(zi))
    rho_in = float(np.min(np.abs(zi - c_in)))
    if not domain.inner.polygon(1024).contains(sg.Point(c_in.real, c_in.imag)):
        c_in = z0

    def columns(z):
        w = (z - c_out) / rho_out
        v = rho_in / (z - c_in)
        cols = [np.ones(z.size)]
        for n in range(1, n_terms + 1):
            wn = w ** n
            cols += [wn.real, -wn.imag]
        for n in range(1, n_terms + 1):
            vn = v ** n
            cols += [vn.real, -vn.imag]
        return np.column_stack(cols)

    log_R1 = _log_capacity(domain.outer, z0, n_pts, n_terms)
    Ao = columns(zo)
    Ai = columns(zi)
    A = np.block([[Ao, np.zeros((n_pts, 1))], [Ai, -np.ones((n_pts, 1))]])
    rhs = np.concatenate([log_R1 - np.log(np.abs(zo - z0)), -np.log(np.abs(zi - z0))])
    scale = np.maximum(np.linalg.norm(A, axis=0), 1e-300)
    sol, *_ = np.linalg.lstsq(A / scale, rhs, rcond=1e-14)
    sol = sol / scale
    x = sol[:-1]
    log_R2 = float(sol[-1])
    pos = np.empty(n_terms + 1, dtype=complex)
    pos[0] = x[0]
    pos[1:] = x[1:2 * n_terms + 1:2] + 1j * x[2:2 * n_terms + 1:2]
    off = 2 * n_terms + 1
    neg = x[off::2] + 1j * x[off + 1::2]
    series = _ForwardSeries(z0, c_out, rho_out, c_in, rho_in, pos, neg)
    return series, float(np.exp(log_R1)), float(np.exp(log_R2))


def _fit_inverse(series: _ForwardSeries, domain, model, n_pts: int, n_terms: int):
    t = TWO_PI * np.arange(n_pts) / n_pts
    zo = domain.outer.evaluate(t)
    zi = domain.inner.evaluate(t)
    tho = np.angle(series.psi(zo))
    thi = np.angle(series.psi(zi))
    zeta = np.concatenate([model.R1 * np.exp(1j * tho), model.R2 * np.exp(1j * thi)])
    a = zeta / model.R1
    b = model.R2 / zeta
    cols = [a ** n for n in range(n_terms + 1)] + [b ** n for n in range(1, n_terms + 1)]
    A = np.column_stack(cols)
    sol, *_ = np.linalg.lstsq(A, np.concatenate([zo, zi]), rcond=1e-14)
    return sol[: n_terms + 1], sol[n_terms + 1:], (t, tho, thi)


def _check_resolution(n_boundary: int, n_series: int):
    if n_boundary < 32 or n_series < 4:
        raise ValueError("resolution below minimum (n_boundary >= 32, n_series >= 4)")


def build_conformal_map(domain: DoublyConnectedDomain, resolution=(256, 128),
                        tol: float = 1e-6) -> ConformalMap:
    """Construct ``ψ`` and ``ψ^{-1}`` at ``resolution = (n_boundary, n_series)``.

    The linear fit uses ``max(n_boundary, 4 n_series)`` collocation points
    per curve so the least-squares system is overdetermined.

    Raises
    ------
    NumericsFailure
        If the fitted boundary conditions are violated by more than ``tol``.
    """
    n_boundary, n_series = map(int, resolution)
    _check_resolution(n_boundary, n_series)
    n_pts = max(n_boundary, 4 * n_series)
    series, R1, R2 = _fit_forward(domain, n_pts, n_series)
    if not (R1 > R2 > 0):
        raise NumericsFailure(f"fitted radii invalid: R1={R1}, R2={R2}")
    model = AnnulusModel(R1, R2)
    # check on an off-grid sampling
    tc = TWO_PI * (np.arange(2 * n_pts) + 0.5) / (2 * n_pts)
    ro = np.abs(np.log(np.abs(series.psi(domain.outer.evaluate(tc)))) - np.log(R1))
    ri = np.abs(np.log(np.abs(series.psi(domain.inner.evaluate(tc)))) - np.log(R2))
    res = float(max(ro.max(), ri.max()))
    if not np.isfinite(res) or res > tol:
        raise NumericsFailure(f"boundary residual {res:.3e} exceeds {tol:.1e}")
    n_fit = 4 * n_pts
    inv_pos, inv_neg, (t, tho, thi) = _fit_inverse(series, domain, model, n_fit, n_series)
    so = _arclength_table(domain.outer, t)
    si = _arclength_table(domain.inner, t)
    corr = {"outer": (t, so, np.unwrap(tho)), "inner": (t, si, np.unwrap(thi))}
    cmap = ConformalMap(domain, model, series, inv_pos, inv_neg, corr, res)
    # conjugate-period / single-valuedness check: image angle must wind once
    for key in ("outer", "inner"):
        th = corr[key][2]
        wind = (th[-1] - th[0] + (th[1] - th[0])) / TWO_PI
        if abs(wind - 1.0) > 1e-3:
            raise NumericsFailure(f"{key} image angle winds {wind:.4f} times")
    return cmap


def conformal_modulus(domain: DoublyConnectedDomain, resolution=(256, 128)) -> AnnulusModel:
    """Reference annulus of ``domain`` (``q = R2/R1``, ``R1`` = outer capacity)."""
    n_boundary, n_series = map(int, resolution)
    _check_resolution(n_boundary, n_series)
    n_pts = max(n_boundary, 4 * n_series)
    _, R1, R2 = _fit_forward(domain, n_pts, n_series)
    if not (R1 > R2 > 0) or not np.isfinite(R1 * R2):
        raise NumericsFailure("modulus solve failed")
    return AnnulusModel(R1, R2)


def _arclength_table(curve: BoundaryCurve, t) -> np.ndarray:
    speed = np.abs(curve.evaluate(t, 1))
    mean, per = fou.antiderivative_periodic(speed)
    return mean * t + per


# ----------------------------------------------------------------------------
# free boundary


@dataclass(frozen=True)
class FreeBoundary:
    """The curve ``γ = ψ^{-1}(|ζ| = R)`` sampled uniformly in arclength.

    Attributes
    ----------
    s : ndarray
        Arclength nodes ``j |γ| / n``.
    dpsi_theta : ndarray
        ``ψ'`` at the preimages of the uniform angles ``2πj/n``.
    gamma : ndarray
        Complex points ``γ(s)``.
    theta : ndarray
        Image angles ``arg ψ(γ(s))``.
    normal : ndarray
        Unit normal pointing from the inner region Ω⁻ into Ω⁺.
    normal_deriv : ndarray
        ``|∂nψ| = |ψ'|`` on γ.
    curvature : ndarray
        Signed curvature (positive for a counterclockwise circle).
    dpsi : ndarray
        Complex ``ψ'`` on γ.
    dist_inner, dist_outer : float
        Distance from γ to the inner and outer boundary curves.
    """

    s: np.ndarray
    gamma: np.ndarray
    theta: np.ndarray
    normal: np.ndarray
    normal_deriv: np.ndarray
    curvature: np.ndarray
    dpsi: np.ndarray
    length: float
    dist_inner: float
    dist_outer: float
    R: float
    dpsi_theta: np.ndarray = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.s.size

    @property
    def chart_width(self) -> float:
        """Half width of a tubular neighbourhood on which Fermi coordinates are valid."""
        kmax = float(np.max(np.abs(self.curvature)))
        reach = 1.0 / kmax if kmax > 0 else np.inf
        return float(min(reach, self.dist_inner, self.dist_outer))

    def _interp(self, values, s):
        return fou.eval_periodic(values, np.mod(s, self.length), period=self.length)

    def normal_deriv_at(self, s):
        return np.asarray(self._interp(self.normal_deriv, s)).reshape(np.shape(s))

    def curvature_at(self, s):
        return np.asarray(self._interp(self.curvature, s)).reshape(np.shape(s))

    def point_at(self, s):
        return np.asarray(self._interp(self.gamma, s)).reshape(np.shape(s))

    def normal_at(self, s):
        v = np.asarray(self._interp(self.normal, s)).reshape(np.shape(s))
        return v / np.abs(v)

    def total_turning(self) -> float:
        """``∮ κ ds``."""
        return float(np.mean(self.curvature) * self.length)

    def flux_integral(self) -> float:
        """``∮ |∂nψ| ds``; equals ``2πR``."""
        return float(np.mean(self.normal_deriv) * self.length)

    def to_table(self) -> np.ndarray:
        """Columns ``(s, x, y, |∂nψ|, κ)``."""
        return np.column_stack([self.s, self.gamma.real, self.gamma.imag,
                                self.normal_deriv, self.curvature])


def free_boundary(cmap: ConformalMap, model: AnnulusModel | None = None,
                  n: int = 257) -> FreeBoundary:
    """Sample ``γ = ψ^{-1}(C_R)`` at ``n`` points equally spaced in arclength."""
    model = model or cmap.model
    R = model.R
    th = TWO_PI * np.arange(n) / n
    zeta = R * np.exp(1j * th)
    z = cmap.inverse(zeta)
    dz = 1j * zeta / cmap.derivative(z)  # dz/dθ
    speed = np.abs(dz)
    mean, per = fou.antiderivative_periodic(speed)
    L = mean * TWO_PI
    s_nodes = L * np.arange(n) / n
    # invert s(θ) = mean θ + per(θ) by Newton using the trigonometric interpolant
    theta = s_nodes / mean
    for _ in range(50):
        s_val = mean * theta + fou.eval_periodic(per, theta)
        ds = fou.eval_periodic(speed, theta)
        step = (s_val - s_nodes) / ds
        theta = theta - step
        if np.max(np.abs(step)) < 1e-15:
            break
    zeta_s = R * np.exp(1j * theta)
    g = cmap.inverse(zeta_s)
    dpsi = cmap.derivative(g)
    zs = fou.diff_periodic(g, period=L)
    zss = fou.diff_periodic(g, period=L, order=2)
    curvature = np.imag(np.conj(zs) * zss) / np.abs(zs) ** 3
    tangent = zs / np.abs(zs)
    normal = -1j * tangent
    if np.any(np.abs(dpsi) <= 0):
        raise GeometryError("ψ' vanishes on γ")
    if cmap.domain is not None:
        line = sg.LinearRing(np.column_stack([g.real, g.imag]))
        d_in = line.distance(cmap.domain.inner.polygon().exterior)
        d_out = line.distance(cmap.domain.outer.polygon().exterior)
    else:
        d_in, d_out = R - model.R2, model.R1 - R
    return FreeBoundary(s=s_nodes, gamma=g, theta=np.mod(theta, TWO_PI), normal=normal,
                        normal_deriv=np.abs(dpsi), curvature=curvature, dpsi=dpsi,
                        length=float(L), dist_inner=float(d_in), dist_outer=float(d_out),
                        R=float(R), dpsi_theta=cmap.derivative(z))


def normal_balance_defect(fb: FreeBoundary, model: AnnulusModel) -> float:
    """``max_s |∂nH⁺ + ∂nH⁻|`` on γ.

    ``∂nH⁻`` uses the closed form ``b⁻|ψ'|/R``; ``∂nH⁺`` is evaluated from
    ``b⁺ Re(n ψ'/ψ)`` with the geometric normal of the sampled curve, so the
    result measures how well the sampled γ, its normal and ψ agree.
    """
    from .harmonic import harmonic_measure

    hm = harmonic_measure(model)
    zeta = model.R * np.exp(1j * fb.theta)
    dn_plus = hm.b_plus * np.real(fb.normal * fb.dpsi / zeta)
    dn_minus = hm.b_minus * fb.normal_deriv / model.R
    return float(np.max(np.abs(dn_plus + dn_minus)))


# ----------------------------------------------------------------------------
# convenience constructors


def domain_from_json(spec: dict) -> DoublyConnectedDomain:
    """Parse ``{"fourier": {...}}``, ``{"points": {...}}`` or ``{"annulus": {...}}``."""
    if "annulus" in spec:
        a = spec["annulus"]
        c = a.get("center", [0.0, 0.0])
        return DoublyConnectedDomain.annulus(a["R1"], a["R2"], complex(c[0], c[1]))
    if "circles" in spec:
        co, ci = spec["circles"]["outer"], spec["circles"]["inner"]
        return DoublyConnectedDomain(BoundaryCurve.circle(complex(*co["center"]), co["radius"]),
                                     BoundaryCurve.circle(complex(*ci["center"]), ci["radius"]))
    if "fourier" in spec:
        f = spec["fourier"]
        return DoublyConnectedDomain(BoundaryCurve.from_fourier(f["outer"]),
                                     BoundaryCurve.from_fourier(f["inner"]))
    if "points" in spec:
        p = spec["points"]
        return DoublyConnectedDomain(BoundaryCurve.from_points(p["outer"]),
                                     BoundaryCurve.from_points(p["inner"]))
    raise InvalidDomain("domain must specify one of annulus, circles, fourier, points")


def mobius_circle_map(R_out: float, inner_center: float, inner_radius: float):
    """Closed-form map of ``{|z| < R_out} minus a disc`` onto a centred annulus.

    The inner disc is centred on the real axis. Returns ``(ψ, q)`` where
    ``ψ(z) = R_out m(z/R_out)`` with ``m`` a disc automorphism and ``q`` the
    modulus ``R2/R1``.
    """
    a = inner_center / R_out
    r = inner_radius / R_out
    B = 1.0 + a * a - r * r
    if abs(a) < 1e-300:
        p = 0.0
    else:
        disc = np.sqrt(B * B - 4 * a * a)
        p1, p2 = (B - disc) / (2 * a), (B + disc) / (2 * a)
        p = p1 if abs(p1) < 1 else p2

    def m(zeta):
        return (zeta - p) / (1.0 - p * zeta)

    def psi(z):
        return R_out * m(np.asarray(z, dtype=complex) / R_out)

    q = float(abs(m(a + r)))
    return psi, q
