"""Kernel selection.

The compiled ``_ckernels`` extension is used when importable; otherwise the
numpy implementations in ``_pykernels`` are. Set ``TRIGEVAL_PURE=1`` to force
the fallback.
"""

import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("TRIGEVAL_PURE") != "1":
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass


def _cols(y, x, t):
    return (np.ascontiguousarray(y, dtype=np.float64),
            np.ascontiguousarray(x, dtype=np.float64),
            np.ascontiguousarray(t, dtype=np.int8))


def trigger_sums(y, x, t) -> np.ndarray:
    return _impl.trigger_sums(*_cols(y, x, t))


def ssr_trigger(y, x, t, b0: float, b1: float, b2: float) -> float:
    return float(_impl.ssr_trigger(*_cols(y, x, t), b0, b1, b2))


def ssr_baseline(y, t, a0: float, a1: float) -> float:
    y = np.ascontiguousarray(y, dtype=np.float64)
    t = np.ascontiguousarray(t, dtype=np.int8)
    return float(_impl.ssr_baseline(y, t, a0, a1))
