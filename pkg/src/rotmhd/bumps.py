"""Smooth plateau cutoffs built from the classical exp(-1/t) gluing.

Every frequency cutoff in this package (dyadic ring functions, the low/high
frequency splitter, the kernel window) is a radial plateau function: exactly 1
on an inner region, exactly 0 outside an outer region, and C-infinity in
between.  Only the plateau and support radii are pinned down; the transition
profile is an implementation choice shared by all users so that empirical
constants are comparable across modules.
"""

from __future__ import annotations

import numpy as np


def _glue(t: np.ndarray) -> np.ndarray:
    """exp(-1/t) extended by 0 for t <= 0 (smooth at the origin)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t) -> np.ndarray:
    """Monotone C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    a = _glue(t)
    b = _glue(1.0 - t)
    return a / (a + b + np.finfo(float).tiny)


def plateau(x, inner: float, outer: float) -> np.ndarray:
    """Even cutoff equal to 1 for |x| <= inner and 0 for |x| >= outer.

    Parameters
    ----------
    x : array_like
    inner, outer : plateau and support radii, 0 < inner < outer.
    """
    if not 0.0 < inner < outer:
        raise ValueError(f"need 0 < inner < outer, got {inner}, {outer}")
    t = (np.abs(np.asarray(x, dtype=float)) - inner) / (outer - inner)
    return 1.0 - smooth_step(t)


def chi(x) -> np.ndarray:
    """Reference plateau cutoff: 1 on [0, 1], 0 outside [0, 2]."""
    return plateau(x, 1.0, 2.0)
