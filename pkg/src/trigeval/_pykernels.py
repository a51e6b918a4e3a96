"""Pure numpy versions of the hot kernels (reference and fallback)."""

import numpy as np


def trigger_sums(y, x, t):
    """Return ``[n, St, Sx, Sxx, Stx, Stxx, Sy, Sty, Sxy, Stxy, Syy]``."""
    n = y.shape[0]
    if x.shape[0] != n or t.shape[0] != n:
        raise ValueError("column length mismatch")
    mask = t.astype(bool)
    xx = x * x
    xy = x * y
    return np.array([
        n,
        np.count_nonzero(mask),
        x.sum(),
        xx.sum(),
        x[mask].sum(),
        xx[mask].sum(),
        y.sum(),
        y[mask].sum(),
        xy.sum(),
        xy[mask].sum(),
        np.dot(y, y),
    ], dtype=float)


def ssr_trigger(y, x, t, b0, b1, b2):
    e = y - b0 - (b1 + b2 * t) * x
    return float(np.dot(e, e))


def ssr_baseline(y, t, a0, a1):
    e = y - a0 - a1 * t
    return float(np.dot(e, e))
