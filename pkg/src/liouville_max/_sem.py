"""Gauss-Lobatto-Legendre spectral elements in one variable.

The assembled stiffness ``K = Σ Dₑᵀ Wₑ Dₑ`` and diagonal mass ``M`` give an
exactly symmetric discrete Laplacian, which keeps Newton Jacobians symmetric.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as L


@lru_cache(maxsize=32)
def gll(order: int):
    """Nodes, weights and differentiation matrix on ``[-1, 1]`` (``order + 1`` nodes)."""
    if order < 2:
        raise ValueError("order must be >= 2")
    c = np.zeros(order + 1)
    c[-1] = 1.0
    d1, d2 = L.legder(c), L.legder(c, 2)
    interior = np.sort(L.legroots(d1).real)
    for _ in range(3):  # Newton polish of the roots of P_n'
        interior = interior - L.legval(interior, d1) / L.legval(interior, d2)
    x = np.concatenate([[-1.0], interior, [1.0]])
    Pn = L.legval(x, c)
    w = 2.0 / (order * (order + 1) * Pn ** 2)
    X = x[:, None] - x[None, :]
    np.fill_diagonal(X, 1.0)
    D = (Pn[:, None] / Pn[None, :]) / X
    np.fill_diagonal(D, 0.0)
    # negative-sum diagonal: exact annihilation of constants reduces roundoff
    np.fill_diagonal(D, -D.sum(axis=1))
    return x, w, D


class SEMesh:
    """Continuous GLL mesh on ``[edges[0], edges[-1]]``.

    Attributes
    ----------
    x : ndarray
        Global nodes (shared element endpoints counted once).
    mass : ndarray
        Diagonal mass (quadrature weights).
    stiffness : ndarray
        Dense symmetric ``∫ u' v'`` matrix.
    """

    def __init__(self, edges, order: int = 12):
        edges = np.asarray(edges, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("edges must be increasing")
        self.edges = edges
        self.order = int(order)
        xi, w, D = gll(self.order)
        ne = edges.size - 1
        n = ne * self.order + 1
        x = np.empty(n)
        mass = np.zeros(n)
        K = np.zeros((n, n))
        for e in range(ne):
            a, b = edges[e], edges[e + 1]
            J = 0.5 * (b - a)
            idx = slice(e * self.order, (e + 1) * self.order + 1)
            x[idx] = a + J * (xi + 1.0)
            mass[idx] += J * w
            De = D / J
            K[idx, idx] += De.T @ (J * w[:, None] * De)
        self.x, self.mass, self.stiffness = x, mass, 0.5 * (K + K.T)
        self._xi, self._D = xi, D

    @classmethod
    def graded(cls, a: float, b: float, focus: float, width: float, n_elements: int,
               order: int = 12) -> "SEMesh":
        """Elements clustered around ``focus`` on the scale ``width`` (asinh grading)."""
        lo, hi = np.arcsinh((a - focus) / width), np.arcsinh((b - focus) / width)
        edges = focus + width * np.sinh(np.linspace(lo, hi, n_elements + 1))
        edges[0], edges[-1] = a, b
        return cls(edges, order)

    @property
    def n(self) -> int:
        return self.x.size

    def derivative(self, f) -> np.ndarray:
        """Element-wise derivative, averaged at shared endpoints (first axis)."""
        f = np.asarray(f, dtype=float)
        out = np.zeros_like(f)
        cnt = np.zeros(self.n)
        p = self.order
        for e in range(self.edges.size - 1):
            J = 0.5 * (self.edges[e + 1] - self.edges[e])
            idx = slice(e * p, (e + 1) * p + 1)
            out[idx] += np.tensordot(self._D / J, f[idx], axes=(1, 0))
            cnt[idx] += 1
        return out / cnt.reshape((-1,) + (1,) * (f.ndim - 1))

    def interp(self, f, xq) -> np.ndarray:
        """Polynomial interpolation inside each element."""
        f = np.asarray(f, dtype=float)
        xq = np.atleast_1d(np.asarray(xq, dtype=float))
        e = np.clip(np.searchsorted(self.edges, xq, side="right") - 1, 0, self.edges.size - 2)
        out = np.empty(xq.shape + f.shape[1:])
        p = self.order
        xi = self._xi
        bw = 1.0 / np.prod(xi[:, None] - xi[None, :] + np.eye(p + 1), axis=1)
        for k in np.unique(e):
            sel = e == k
            a, b = self.edges[k], self.edges[k + 1]
            t = 2.0 * (xq[sel] - a) / (b - a) - 1.0
            d = t[:, None] - xi[None, :]
            exact = np.isclose(d, 0.0, atol=1e-15)
            d[exact] = 1.0
            c = bw[None, :] / d
            c[exact.any(axis=1)] = exact[exact.any(axis=1)].astype(float)
            c = c / c.sum(axis=1, keepdims=True)
            out[sel] = np.tensordot(c, f[k * p:(k + 1) * p + 1], axes=(1, 0))
        return out
