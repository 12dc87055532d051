"""Numerically stable scalar helpers shared by the quadrature-heavy modules."""

from __future__ import annotations

import numpy as np
from scipy.special import exprel

__all__ = ["coth", "xcoth_m1", "planck", "exprel", "expm1_plus_x_over_x2"]


def coth(x):
    """coth(x), stable near 0 (series) and for large |x|."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    out = np.where(small, 1.0 / np.where(small, x, 1.0) + x / 3.0, 1.0 / np.tanh(xs))
    return out if out.ndim else float(out)


def xcoth_m1(x):
    """x*coth(x) - 1, stable near 0 where it behaves like x**2/3."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-3
    xs = np.where(small, 1.0, x)
    direct = xs / np.tanh(xs) - 1.0
    series = x * x / 3.0 - x**4 / 45.0
    out = np.where(small, series, direct)
    return out if out.ndim else float(out)


def planck(x):
    """Bose occupation 1/(e^x - 1) via expm1; x > 0."""
    x = np.asarray(x, dtype=float)
    out = 1.0 / np.expm1(x)
    return out if out.ndim else float(out)


def expm1_plus_x_over_x2(x):
    """(e^x - 1 - x)/x**2, stable near 0 where it tends to 1/2."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    direct = (np.expm1(xs) - xs) / (xs * xs)
    series = 0.5 + x / 6.0 + x * x / 24.0
    out = np.where(small, series, direct)
    return out if out.ndim else float(out)
