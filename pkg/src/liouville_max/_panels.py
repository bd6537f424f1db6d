"""Composite Gauss-Legendre panel grids on an interval.

Provides quadrature, cumulative (indefinite) integrals with an optional
exponential kernel, spectral differentiation within panels and
interpolation. Used for every one-dimensional integral in the stretched
normal variable.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as L


@lru_cache(maxsize=None)
def _reference(order: int):
    x, w = L.leggauss(order)
    V = L.legvander(x, order - 1)
    C = np.linalg.inv(V)  # columns: Lagrange basis in Legendre coefficients
    S_fwd = np.empty((order, order))
    S_bwd = np.empty((order, order))
    D = np.empty((order, order))
    for i in range(order):
        c = C[:, i]
        ci = L.legint(c, lbnd=-1.0)
        S_fwd[:, i] = L.legval(x, ci)
        S_bwd[:, i] = L.legval(1.0, ci) - S_fwd[:, i]
        D[:, i] = L.legval(x, L.legder(c))
    # barycentric weights for interpolation
    bw = np.array([1.0 / np.prod(x[j] - np.delete(x, j)) for j in range(order)])
    return x, w, S_fwd, S_bwd, D, bw


class PanelGrid:
    """Uniform composite Gauss-Legendre grid on ``[a, b]``.

    Parameters
    ----------
    a, b : float
        Interval end points.
    n_panels : int
        Number of equal panels.
    order : int
        Gauss-Legendre nodes per panel.
    """

    def __init__(self, a: float, b: float, n_panels: int, order: int = 16):
        self.a, self.b = float(a), float(b)
        self.n_panels, self.order = int(n_panels), int(order)
        self.h = (self.b - self.a) / self.n_panels
        xr, wr, self._S_fwd, self._S_bwd, self._D, self._bw = _reference(self.order)
        self._xr = xr
        self.edges = self.a + self.h * np.arange(self.n_panels + 1)
        left = self.edges[:-1]
        self.x = (left[:, None] + 0.5 * self.h * (xr + 1.0)).ravel()
        self.w = np.tile(0.5 * self.h * wr, self.n_panels)

    @classmethod
    def symmetric(cls, T: float, h: float, order: int = 16) -> "PanelGrid":
        """Grid on ``[-T, T]`` with panel width at most ``h``."""
        n = int(np.ceil(2.0 * T / h - 1e-12))
        return cls(-T, T, n, order)

    def __len__(self) -> int:
        return self.x.size

    def integrate(self, f) -> float | np.ndarray:
        """Quadrature of samples along the last axis."""
        return np.asarray(f) @ self.w

    def _panels(self, f):
        return np.asarray(f, dtype=float).reshape(self.n_panels, self.order)

    def cumulative(self, f, omega: float = 0.0, direction: str = "forward") -> np.ndarray:
        """Indefinite integrals with an exponential kernel.

        ``forward``:  J(x) = int_a^x exp(-omega (x - y)) f(y) dy
        ``backward``: J(x) = int_x^b exp(-omega (y - x)) f(y) dy

        The kernel never grows by more than ``exp(omega h)`` inside a panel,
        so the interpolation stays accurate when ``omega h`` is moderate.
        """
        F = self._panels(f)
        hh = 0.5 * self.h
        loc = 0.5 * self.h * (self._xr + 1.0)  # offsets from left edge
        out = np.empty_like(F)
        if direction == "forward":
            E = np.exp(-omega * (loc[:, None] - loc[None, :]))
            M = hh * self._S_fwd * E
            decay = np.exp(-omega * loc)
            tot_decay = np.exp(-omega * self.h)
            Mt = hh * self._reference_total() * np.exp(-omega * (self.h - loc))
            carry = 0.0
            for p in range(self.n_panels):
                out[p] = decay * carry + M @ F[p]
                carry = tot_decay * carry + Mt @ F[p]
        elif direction == "backward":
            E = np.exp(-omega * (loc[None, :] - loc[:, None]))
            M = hh * self._S_bwd * E
            decay = np.exp(-omega * (self.h - loc))
            tot_decay = np.exp(-omega * self.h)
            Mt = hh * self._reference_total() * np.exp(-omega * loc)
            carry = 0.0
            for p in range(self.n_panels - 1, -1, -1):
                out[p] = decay * carry + M @ F[p]
                carry = tot_decay * carry + Mt @ F[p]
        else:
            raise ValueError("direction must be 'forward' or 'backward'")
        return out.ravel()

    def _reference_total(self) -> np.ndarray:
        _, wr, *_ = _reference(self.order)
        return wr

    def diff(self, f, k: int = 1) -> np.ndarray:
        """Panel-wise spectral derivative of order ``k``."""
        F = self._panels(f)
        D = self._D * (2.0 / self.h)
        for _ in range(k):
            F = F @ D.T
        return F.ravel()

    def interp(self, f, xq) -> np.ndarray:
        """Barycentric Lagrange interpolation inside the owning panel."""
        F = self._panels(f)
        xq = np.atleast_1d(np.asarray(xq, dtype=float))
        p = np.clip(((xq - self.a) / self.h).astype(int), 0, self.n_panels - 1)
        s = 2.0 * (xq - self.edges[p]) / self.h - 1.0
        diff = s[:, None] - self._xr[None, :]
        exact = np.isclose(diff, 0.0, atol=1e-15)
        diff[exact] = 1.0
        t = self._bw[None, :] / diff
        val = np.sum(t * F[p], axis=1) / np.sum(t, axis=1)
        hit = exact.any(axis=1)
        if hit.any():
            j = np.argmax(exact[hit], axis=1)
            val[hit] = F[p[hit], j]
        return val
