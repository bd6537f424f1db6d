"""Harmonic measures of the free boundary and the outer approximation.

Everything is computed on the reference annulus, where the harmonic measures
are affine in ``log r`` and the correctors are explicit mode sums with the
radial factors ``r^n`` and ``r^{-n}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _fourier as fou
from ._cheb import cheb
from .errors import GeometryError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class HarmonicMeasure:
    """``H⁻ = a⁻ + b⁻ log r`` on ``[R2, R]`` and ``H⁺ = a⁺ + b⁺ log r`` on ``[R, R1]``."""

    a_plus: float
    a_minus: float
    b_plus: float
    b_minus: float

    def H_minus(self, r):
        return self.a_minus + self.b_minus * np.log(r)

    def H_plus(self, r):
        return self.a_plus + self.b_plus * np.log(r)

    def as_dict(self) -> dict:
        return {"a_plus": self.a_plus, "a_minus": self.a_minus,
                "b_plus": self.b_plus, "b_minus": self.b_minus}


def harmonic_measure(model) -> HarmonicMeasure:
    """Closed-form harmonic measures of ``C_R`` in the annulus."""
    lr1, lr2 = np.log(model.R1), np.log(model.R2)
    b_minus = 1.0 / np.log(np.sqrt(model.R1 / model.R2))
    b_plus = -b_minus
    return HarmonicMeasure(a_plus=-b_plus * lr1, a_minus=-b_minus * lr2,
                           b_plus=b_plus, b_minus=b_minus)


# ----------------------------------------------------------------------------
# radial factors of the mode-n Dirichlet problems


def radial_factor(side: str, n, r, model):
    """Harmonic radial factor equal to 1 at ``r = R`` and 0 on the outer boundary of its side.

    ``side`` is ``"minus"`` (``R2 <= r <= R``) or ``"plus"`` (``R <= r <= R1``).
    Returns an array of shape ``(len(n), len(r))``.
    """
    n = np.abs(np.atleast_1d(n)).astype(float)[:, None]
    r = np.atleast_1d(np.asarray(r, dtype=float))[None, :]
    R, R1, R2 = model.R, model.R1, model.R2
    with np.errstate(divide="ignore", invalid="ignore"):
        if side == "minus":
            num = (r / R) ** n - (R2 * R2 / (r * R)) ** n
            den = 1.0 - (R2 / R) ** (2 * n)
            zero = np.log(r / R2) / np.log(R / R2)
        elif side == "plus":
            num = (R / r) ** n - (r * R / (R1 * R1)) ** n
            den = 1.0 - (R / R1) ** (2 * n)
            zero = np.log(R1 / r) / np.log(R1 / R)
        else:
            raise ValueError("side must be 'plus' or 'minus'")
        out = num / den
    return np.where(n == 0, zero, out)


def radial_factor_slope(side: str, n, model):
    """``d/dr`` of :func:`radial_factor` at ``r = R``."""
    n = np.abs(np.atleast_1d(n)).astype(float)
    R, R1, R2 = model.R, model.R1, model.R2
    with np.errstate(divide="ignore", invalid="ignore"):
        if side == "minus":
            x = (R2 / R) ** (2 * n)
            out = (n / R) * (1 + x) / (1 - x)
            zero = 1.0 / (R * np.log(R / R2))
        else:
            x = (R / R1) ** (2 * n)
            out = -(n / R) * (1 + x) / (1 - x)
            zero = -1.0 / (R * np.log(R1 / R))
    return np.where(n == 0, zero, out)


# ----------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class AnnulusGrid:
    """Tensor grid: uniform angles × Chebyshev-Lobatto radii on each sub-annulus."""

    theta: np.ndarray
    r_minus: np.ndarray
    r_plus: np.ndarray

    @classmethod
    def build(cls, model, n_theta: int = 128, n_r: int = 33) -> "AnnulusGrid":
        th = TWO_PI * np.arange(n_theta) / n_theta
        rm, _ = cheb(n_r - 1, model.R2, model.R)
        rp, _ = cheb(n_r - 1, model.R, model.R1)
        return cls(th, rm, rp)

    @property
    def n_r(self) -> int:
        return self.r_minus.size

    def diff_r(self, side: str):
        """Chebyshev radial differentiation matrix for one sub-annulus."""
        r = self.r_minus if side == "minus" else self.r_plus
        return cheb(r.size - 1, r[0], r[-1])[1]


# ----------------------------------------------------------------------------
# outer approximation


@dataclass(frozen=True)
class OuterApprox:
    """``w0± = (β + 2 log β) H± + H̃±`` with mode coefficients of the correctors.

    Attributes
    ----------
    amplitude : float
        ``β + 2 log β``.
    modes : ndarray
        Integer wavenumbers (FFT order) of the corrector data.
    htilde_plus, htilde_minus : ndarray
        Complex Fourier coefficients of ``H̃±`` on ``C_R``.
    w0_plus, w0_minus : ndarray
        Fields on ``grid`` with shape ``(n_theta, n_r)``.
    """

    model: object
    measure: HarmonicMeasure
    amplitude: float
    lam: float
    a0: float
    b0: float
    modes: np.ndarray = field(repr=False)
    htilde_plus: np.ndarray = field(repr=False)
    htilde_minus: np.ndarray = field(repr=False)
    normal_deriv_theta: np.ndarray = field(repr=False)
    grid: AnnulusGrid = field(repr=False)
    w0_plus: np.ndarray = field(repr=False)
    w0_minus: np.ndarray = field(repr=False)

    def htilde(self, side: str, r, theta):
        """Evaluate ``H̃±`` at polar points (broadcast ``r`` with ``theta``)."""
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        c = self.htilde_minus if side == "minus" else self.htilde_plus
        shape = r.shape
        rf, tf = r.ravel(), theta.ravel()
        out = np.zeros(rf.size)
        chunk = 4096
        for i in range(0, rf.size, chunk):
            A = radial_factor(side, self.modes, rf[i:i + chunk], self.model)  # (K, m)
            ph = np.exp(1j * np.outer(self.modes, tf[i:i + chunk]))
            out[i:i + chunk] = np.real(np.sum(c[:, None] * A * ph, axis=0))
        return out.reshape(shape)

    def htilde_dr(self, side: str, r, theta, h: float | None = None):
        """Radial derivative of ``H̃±`` (exact mode sum)."""
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        c = self.htilde_minus if side == "minus" else self.htilde_plus
        n = np.abs(self.modes).astype(float)[:, None]
        m, R, R1, R2 = self.model, self.model.R, self.model.R1, self.model.R2
        rf, tf = r.ravel(), theta.ravel()
        rr = rf[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            if side == "minus":
                num = (n / rr) * ((rr / R) ** n + (R2 * R2 / (rr * R)) ** n)
                den = 1.0 - (R2 / R) ** (2 * n)
                zero = 1.0 / (rr * np.log(R / R2))
            else:
                num = -(n / rr) * ((R / rr) ** n + (rr * R / (R1 * R1)) ** n)
                den = 1.0 - (R / R1) ** (2 * n)
                zero = -1.0 / (rr * np.log(R1 / R))
            dA = np.where(n == 0, zero, num / den)
        ph = np.exp(1j * np.outer(self.modes, tf))
        return np.real(np.sum(c[:, None] * dA * ph, axis=0)).reshape(r.shape)

    def w0(self, side: str, r, theta):
        """``w0±`` at polar points in the reference annulus."""
        H = self.measure.H_minus(r) if side == "minus" else self.measure.H_plus(r)
        return self.amplitude * H + self.htilde(side, r, theta)

    def w0_dr(self, side: str, r, theta):
        b = self.measure.b_minus if side == "minus" else self.measure.b_plus
        return self.amplitude * b / np.asarray(r, float) + self.htilde_dr(side, r, theta)

    def radial_profiles(self, side: str, n_modes: int):
        """Per-mode radial profiles ``(r, Re c_n A_n(r), Im c_n A_n(r))``."""
        r = self.grid.r_minus if side == "minus" else self.grid.r_plus
        c = self.htilde_minus if side == "minus" else self.htilde_plus
        out = []
        for n in range(n_modes + 1):
            idx = np.where(self.modes == n)[0]
            cn = c[idx[0]] if idx.size else 0.0
            A = radial_factor(side, [n], r, self.model)[0]
            out.append((n, r, np.real(cn * A), np.imag(cn * A)))
        return out


def outer_w0(model, sp, fb, grid: AnnulusGrid | None = None) -> OuterApprox:
    """Outer approximation from the scaling parameters and free boundary.

    Raises
    ------
    GeometryError
        If ``∂nH⁺`` is not strictly negative on γ (Hopf positivity lost).
    """
    hm = harmonic_measure(model)
    if fb.dpsi_theta is None:
        raise GeometryError("free boundary lacks ψ' at uniform angles")
    nd = np.abs(fb.dpsi_theta)
    dn_plus = hm.b_plus * nd / model.R
    dn_minus = hm.b_minus * nd / model.R
    if np.any(dn_plus >= 0) or np.any(dn_minus <= 0):
        raise GeometryError("Hopf positivity violated on the free boundary")
    data_minus = 2.0 * np.log(dn_minus)
    data_plus = 2.0 * np.log(-dn_plus)
    n = nd.size
    modes = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    cm = np.fft.fft(data_minus) / n
    cp = np.fft.fft(data_plus) / n
    if n % 2 == 0:
        cm[n // 2] = cp[n // 2] = 0.0
    grid = grid or AnnulusGrid.build(model, n_theta=max(64, 2 * (n // 2)))
    oa = OuterApprox(model=model, measure=hm, amplitude=sp.amplitude, lam=sp.lam, a0=sp.a0,
                     b0=sp.b0, modes=modes, htilde_plus=cp, htilde_minus=cm,
                     normal_deriv_theta=nd, grid=grid,
                     w0_plus=np.empty(0), w0_minus=np.empty(0))
    TH, RM = np.meshgrid(grid.theta, grid.r_minus, indexing="ij")
    _, RP = np.meshgrid(grid.theta, grid.r_plus, indexing="ij")
    object.__setattr__(oa, "w0_minus", oa.w0("minus", RM, TH))
    object.__setattr__(oa, "w0_plus", oa.w0("plus", RP, TH))
    return oa


def matching_defects(oa: OuterApprox, sp) -> tuple[float, float]:
    """Sup over γ of the Dirichlet and Neumann matching defects.

    Dirichlet: ``w0± - b0 - 2 log μ``; Neumann: ``∂n w0± ± a0 λ μ``.
    Both are evaluated at the preimages of the uniform angles.
    """
    m = oa.model
    n = oa.normal_deriv_theta.size
    th = TWO_PI * np.arange(n) / n
    nd = oa.normal_deriv_theta
    mu = oa.amplitude * oa.measure.b_minus * nd / (sp.a0 * sp.lam * m.R)
    a0lm = sp.a0 * sp.lam * mu
    R = np.full(n, m.R)
    dirichlet, neumann = 0.0, 0.0
    for side, sign in (("minus", -1.0), ("plus", 1.0)):
        d = oa.w0(side, R, th) - sp.b0 - 2.0 * np.log(mu)
        dn = nd * oa.w0_dr(side, R, th) + sign * a0lm
        dirichlet = max(dirichlet, float(np.max(np.abs(d))))
        neumann = max(neumann, float(np.max(np.abs(dn))))
    return dirichlet, neumann
