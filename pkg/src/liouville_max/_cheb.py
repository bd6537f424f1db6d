"""Chebyshev-Lobatto collocation on an interval."""
from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def _cheb_ref(n: int):
    """Nodes ``x_j = -cos(πj/n)`` (ascending) and the differentiation matrix."""
    if n == 0:
        return np.array([0.0]), np.zeros((1, 1))
    j = np.arange(n + 1)
    x = -np.cos(np.pi * j / n)
    c = np.where((j == 0) | (j == n), 2.0, 1.0) * (-1.0) ** j
    X = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (X + np.eye(n + 1))
    D -= np.diag(D.sum(axis=1))
    return x, D


def cheb(n: int, a: float = -1.0, b: float = 1.0):
    """``n + 1`` Lobatto nodes on ``[a, b]`` (ascending) and the first-derivative matrix."""
    x, D = _cheb_ref(n)
    return a + (b - a) * (x + 1) / 2, D * (2.0 / (b - a))


def clenshaw_curtis_weights(n: int, a: float = -1.0, b: float = 1.0) -> np.ndarray:
    """Quadrature weights on the nodes returned by :func:`cheb`."""
    theta = np.pi * np.arange(n + 1) / n
    w = np.zeros(n + 1)
    v = np.ones(n - 1)
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n * n - 1)
        for k in range(1, n // 2):
            v -= 2.0 * np.cos(2 * k * theta[1:-1]) / (4 * k * k - 1)
        v -= np.cos(n * theta[1:-1]) / (n * n - 1)
    else:
        w[0] = w[n] = 1.0 / (n * n)
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[1:-1]) / (4 * k * k - 1)
    w[1:-1] = 2.0 * v / n
    return w * (b - a) / 2
