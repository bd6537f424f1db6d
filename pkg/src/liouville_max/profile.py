"""One-dimensional Liouville profile, scaling parameters and inner approximation.

The inner profile is ``U(t) = log(2 sech^2 t)``, the even solution of
``U'' + exp(U) = 0`` with ``U(0) = log 2``. Away from the origin it is an
affine function ``-a0 |t| + b0`` up to an exponentially small tail.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ModulationTooLarge, OutOfAsymptoticRange

LOG2 = float(np.log(2.0))
A0 = 2.0
#: Exact tail offset: U(t) + 2|t| -> log 8.
B0 = 3.0 * LOG2
#: Offset used by the original scaling formula, kept for reproducibility.
B0_LEGACY = LOG2


def sech(x):
    """Overflow-free hyperbolic secant."""
    ax = np.abs(np.asarray(x, dtype=float))
    e = np.exp(-ax)
    return 2.0 * e / (1.0 + e * e)


def bubble_1d(t):
    """Return ``(U, U', U'')`` for ``U(t) = log(2 sech^2 t)``.

    Evaluated as ``3 log 2 - 2|t| - 2 log1p(exp(-2|t|))`` so that no
    intermediate quantity overflows.
    """
    t = np.asarray(t, dtype=float)
    at = np.abs(t)
    U = 3.0 * LOG2 - 2.0 * at - 2.0 * np.log1p(np.exp(-2.0 * at))
    U1 = -2.0 * np.tanh(t)
    U2 = -2.0 * sech(t) ** 2
    return U, U1, U2


def bubble_2d(r):
    """Standard planar bubble ``log(8 / (1 + r^2)^2)``, a solution of ``Δw + e^w = 0``."""
    r = np.asarray(r, dtype=float)
    return np.log(8.0) - 2.0 * np.log1p(r * r)


@dataclass(frozen=True)
class InnerProfile:
    """Asymptotic constants of the inner profile: ``U(t) ~ -a0|t| + b0``."""

    a0: float = A0
    b0: float = B0

    def __call__(self, t):
        return bubble_1d(t)[0]

    def tail_defect(self, t):
        """``U(t) + a0|t| - b0``; decays like ``exp(-a0|t|)`` when ``b0 = log 8``."""
        t = np.asarray(t, dtype=float)
        return bubble_1d(t)[0] + self.a0 * np.abs(t) - self.b0


@dataclass(frozen=True)
class KernelBasis:
    """Bounded kernel of ``∂η² + e^U``: ``phi1 = ηU' + 2`` (even) and ``phi2 = U'`` (odd).

    The Wronskian uses the convention ``W(f, g) = f'g - fg'`` so that
    ``W(phi1, phi2) = 4``.
    """

    wronskian: float = 4.0

    @staticmethod
    def phi1(eta):
        _, U1, _ = bubble_1d(eta)
        return np.asarray(eta) * U1 + 2.0

    @staticmethod
    def phi2(eta):
        return bubble_1d(eta)[1]

    @staticmethod
    def derivatives(eta):
        """Return ``(phi1, phi1', phi1'', phi2, phi2', phi2'')``."""
        eta = np.asarray(eta, dtype=float)
        _, U1, U2 = bubble_1d(eta)
        U3 = 4.0 * np.tanh(eta) * sech(eta) ** 2
        p1 = eta * U1 + 2.0
        p1d = U1 + eta * U2
        p1dd = 2.0 * U2 + eta * U3
        return p1, p1d, p1dd, U1, U2, U3

    def wronskian_at(self, eta):
        p1, p1d, _, p2, p2d, _ = self.derivatives(eta)
        return p1d * p2 - p1 * p2d

    def operator_residual(self, eta):
        """Pointwise ``(L phi1, L phi2)`` with ``L = ∂η² + e^U``."""
        U, _, _ = bubble_1d(eta)
        p1, _, p1dd, p2, _, p2dd = self.derivatives(eta)
        eU = np.exp(U)
        return p1dd + eU * p1, p2dd + eU * p2


# ----------------------------------------------------------------------------
# scaling parameters


@dataclass(frozen=True)
class ScalingParams:
    """λ-dependent scales of the inner/outer construction.

    Attributes
    ----------
    lam : float
        Small parameter.
    beta : float
        ``2 log(1/(a0 λ)) + b0``.
    alpha : float
        ``(β + 2 log β) b⁻ / (a0 R)``, the stretch factor with ``λμ = α|∂nψ|``.
    s : ndarray
        Arclength nodes on the free boundary.
    mu : ndarray
        ``μ_λ(s) = (β + 2 log β) ∂nH⁻ / (a0 λ)`` at the nodes.
    delta : ndarray
        Inner-region half width ``M log β / (λ μ)``.
    """

    lam: float
    beta: float
    alpha: float
    M: float
    a0: float
    b0: float
    s: np.ndarray = field(repr=False)
    mu: np.ndarray = field(repr=False)
    delta: np.ndarray = field(repr=False)
    normal_deriv: np.ndarray = field(repr=False)
    length: float = 2 * np.pi
    b_minus: float = 1.0
    R: float = 1.0
    _fb: object = field(default=None, repr=False, compare=False)

    @property
    def log_beta(self) -> float:
        return float(np.log(self.beta))

    @property
    def amplitude(self) -> float:
        """``β + 2 log β``, the height of the outer field on the free boundary."""
        return self.beta + 2.0 * self.log_beta

    def mu_at(self, s):
        """μ_λ at arbitrary arclength positions."""
        if self._fb is None:
            return np.full(np.shape(s), self.mu[0])
        nd = self._fb.normal_deriv_at(s)
        return self.amplitude * self.b_minus * nd / (self.a0 * self.lam * self.R)

    def delta_at(self, s):
        return self.M * self.log_beta / (self.lam * self.mu_at(s))


def beta_of(lam: float, a0: float = A0, b0: float = B0) -> float:
    """``β = 2 log(1/(a0 λ)) + b0``."""
    return 2.0 * np.log(1.0 / (a0 * lam)) + b0


def scaling_params(lam: float, fb, model, M: float = 5.0, *, a0: float = A0,
                   b0: float = B0) -> ScalingParams:
    """Build the scaling parameters at ``λ`` for a free boundary ``fb``.

    Raises
    ------
    OutOfAsymptoticRange
        If ``λ`` is outside ``(0, 0.1]`` or ``β <= 1``.
    """
    if not (0.0 < lam <= 0.1):
        raise OutOfAsymptoticRange(f"lambda={lam} outside (0, 0.1]")
    if M <= 0:
        raise ValueError("M must be positive")
    beta = beta_of(lam, a0, b0)
    if beta <= 1.0:
        raise OutOfAsymptoticRange(f"beta={beta} <= 1")
    b_minus = 1.0 / np.log(np.sqrt(model.R1 / model.R2))
    amp = beta + 2.0 * np.log(beta)
    alpha = amp / (a0 * np.sqrt(model.R1 * model.R2) * np.log(np.sqrt(model.R1 / model.R2)))
    nd = np.asarray(fb.normal_deriv, dtype=float)
    mu = amp * b_minus * nd / (a0 * lam * model.R)
    lam_mu = lam * mu
    if np.max(np.abs(lam_mu - alpha * nd)) > 1e-12 * max(1.0, np.max(lam_mu)):
        raise AssertionError("scaling identity λμ = α|∂nψ| violated")
    delta = M * np.log(beta) / lam_mu
    return ScalingParams(lam=float(lam), beta=float(beta), alpha=float(alpha), M=float(M),
                         a0=a0, b0=b0, s=np.asarray(fb.s, dtype=float), mu=mu, delta=delta,
                         normal_deriv=nd, length=float(fb.length), b_minus=float(b_minus),
                         R=float(model.R), _fb=fb)


# ----------------------------------------------------------------------------
# modulation shapes


def shape_derivatives(Q: float, eta) -> np.ndarray:
    """``Y = tanh η · sech(η/Q)`` and its first three derivatives, shape ``(4, n)``.

    ``Q = inf`` gives ``Y = tanh η``.
    """
    eta = np.asarray(eta, dtype=float)
    T = np.tanh(eta)
    S2 = sech(eta) ** 2
    T1, T2, T3 = S2, -2.0 * T * S2, -2.0 * S2 * (S2 - 2.0 * T * T)
    if np.isinf(Q):
        return np.stack([T, T1, T2, T3])
    E = sech(eta / Q)
    tau = np.tanh(eta / Q)
    E1 = -E * tau / Q
    E2 = E * (2.0 * tau ** 2 - 1.0) / Q ** 2
    E3 = E * tau * (5.0 - 6.0 * tau ** 2) / Q ** 3
    Y0 = T * E
    Y1 = T1 * E + T * E1
    Y2 = T2 * E + 2.0 * T1 * E1 + T * E2
    Y3 = T3 * E + 3.0 * T2 * E1 + 3.0 * T1 * E2 + T * E3
    return np.stack([Y0, Y1, Y2, Y3])


@dataclass(frozen=True)
class ModulationShape:
    """Shape functions of the modulation ansatz ``f = (aη + b) Y(η)`` sampled on ``eta``."""

    Q: float
    eta: np.ndarray = field(repr=False)
    Y: np.ndarray = field(repr=False)
    Z1: np.ndarray = field(repr=False)
    Z2: np.ndarray = field(repr=False)
    W1: np.ndarray = field(repr=False)
    W2: np.ndarray = field(repr=False)


def modulation_shapes(Q: float, eta) -> ModulationShape:
    """Sample ``Z1, Z2, W1, W2`` for decay parameter ``Q`` (``inf`` allowed)."""
    if not (Q > 0):
        raise ValueError("Q must be positive or inf")
    eta = np.asarray(eta, dtype=float)
    Y = shape_derivatives(Q, eta)
    _, U1, _ = bubble_1d(eta)
    Z1 = eta * U1 * Y[2] + 2.0 * U1 * Y[1] + 2.0 * eta * Y[3] + 6.0 * Y[2]
    W1 = eta * U1 * Y[0] + 2.0 * Y[0] + 2.0 * eta * Y[1]
    Z2 = U1 * Y[2] + 2.0 * Y[3]
    W2 = U1 * Y[0] + 2.0 * Y[1]
    return ModulationShape(Q=float(Q), eta=eta, Y=Y, Z1=Z1, Z2=Z2, W1=W1, W2=W2)


def aux_limit_constant(T: float = 40.0, h: float = 0.25) -> tuple[float, float]:
    """Renormalized integrals at ``Q = inf``.

    Returns the truncated values of ``∫[W1 U' - 4(η tanh η - 1)]`` and
    ``∫[W2 (ηU'+2) - 4(η tanh η - 1)]``, whose common limit is finite.
    """
    from ._panels import PanelGrid

    g = PanelGrid.symmetric(T, h)
    sh = modulation_shapes(np.inf, g.x)
    _, U1, _ = bubble_1d(g.x)
    ref = 4.0 * (g.x * np.tanh(g.x) - 1.0)
    one = g.integrate(sh.W1 * U1 - ref)
    two = g.integrate(sh.W2 * (g.x * U1 + 2.0) - ref)
    return float(one), float(two)


# ----------------------------------------------------------------------------
# inner approximation


def inner_v0(s, t, f, sp: ScalingParams):
    """Modulated inner approximation ``U(η + f) + 2 log[μ (1 + ∂η f)]``.

    Parameters
    ----------
    s, t : array_like
        Arclength along the free boundary and signed distance from it.
    f : object or None
        Modulation with a method ``evaluate(s, eta)`` returning at least
        ``(f, f_eta)``. ``None`` means no modulation.
    sp : ScalingParams
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    mu = sp.mu_at(s)
    eta = sp.lam * mu * t
    if f is None:
        return bubble_1d(eta)[0] + 2.0 * np.log(mu)
    vals = f.evaluate(s, eta)
    fv, fe = vals[0], vals[1]
    jac = 1.0 + fe
    if np.any(jac <= 0.0):
        raise ModulationTooLarge("1 + d_eta f <= 0")
    return bubble_1d(eta + fv)[0] + 2.0 * np.log(mu * jac)
