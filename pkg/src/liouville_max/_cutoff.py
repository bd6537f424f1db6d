"""Smooth cutoff functions built from the ``exp(-1/x)`` mollifier."""
from __future__ import annotations

import numpy as np


def _psi(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x):
    """C^∞ step: 0 for ``x <= 0``, 1 for ``x >= 1``."""
    x = np.asarray(x, dtype=float)
    a, b = _psi(x), _psi(1.0 - x)
    return a / (a + b)


def bump(t, delta):
    """1 on ``|t| <= delta``, 0 on ``|t| >= 2 delta``, smooth in between."""
    t = np.asarray(t, dtype=float)
    return 1.0 - smooth_step(np.abs(t) / np.asarray(delta, dtype=float) - 1.0)


def bump_between(t, inner, outer):
    """1 on ``|t| <= inner``, 0 on ``|t| >= outer`` (arrays broadcast)."""
    t = np.abs(np.asarray(t, dtype=float))
    inner = np.asarray(inner, dtype=float)
    outer = np.asarray(outer, dtype=float)
    return 1.0 - smooth_step((t - inner) / (outer - inner))
