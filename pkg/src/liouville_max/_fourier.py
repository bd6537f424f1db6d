"""Trigonometric interpolation helpers for periodic samples on uniform grids."""
from __future__ import annotations

import numpy as np


def wavenumbers(n: int) -> np.ndarray:
    """Integer wavenumbers in FFT order, Nyquist mode set to zero for even ``n``."""
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    return k


def diff_periodic(values, period: float = 2 * np.pi, order: int = 1) -> np.ndarray:
    """Spectral derivative of uniformly sampled periodic data (real or complex)."""
    v = np.asarray(values)
    n = v.shape[-1]
    k = wavenumbers(n) * (2 * np.pi / period)
    out = np.fft.ifft((1j * k) ** order * np.fft.fft(v, axis=-1), axis=-1)
    return out.real if np.isrealobj(v) else out


def eval_periodic(values, x, period: float = 2 * np.pi) -> np.ndarray:
    """Evaluate the trigonometric interpolant of uniform samples at points ``x``.

    The samples are assumed to sit at ``j * period / n``.
    """
    v = np.asarray(values)
    n = v.shape[-1]
    c = np.fft.fft(v) / n
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        c = c.copy()
        c[n // 2] *= 0.5
        k = np.concatenate([k, [n / 2]])
        c = np.concatenate([c, [c[n // 2]]])
        k[n // 2] = -n / 2
    x = np.atleast_1d(np.asarray(x, dtype=float))
    phase = np.exp(1j * np.outer(x * (2 * np.pi / period), k))
    out = phase @ c
    return out.real if np.isrealobj(v) else out


def antiderivative_periodic(values, period: float = 2 * np.pi):
    """Split ``∫_0^x f`` into ``mean * x + periodic part``; returns ``(mean, periodic samples)``."""
    v = np.asarray(values, dtype=float)
    n = v.size
    c = np.fft.fft(v)
    mean = c[0].real / n
    k = wavenumbers(n) * (2 * np.pi / period)
    cc = np.zeros_like(c)
    nz = k != 0
    cc[nz] = c[nz] / (1j * k[nz])
    per = np.fft.ifft(cc).real
    return mean, per - per[0]
