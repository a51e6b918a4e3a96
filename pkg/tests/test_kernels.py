import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trigeval import _pykernels, kernels

try:
    from trigeval import _ckernels
except ImportError:  # extension not built
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


def columns(n, seed):
    rng = np.random.default_rng(seed)
    return (rng.normal(size=n) * 3 + 1, rng.uniform(0, 1, n),
            rng.integers(0, 2, n).astype(np.int8))


def test_python_sums_match_definition():
    y, x, t = columns(50, 0)
    got = _pykernels.trigger_sums(y, x, t)
    tf = t.astype(float)
    want = [50, tf.sum(), x.sum(), (x * x).sum(), (tf * x).sum(), (tf * x * x).sum(), y.sum(),
            (tf * y).sum(), (x * y).sum(), (tf * x * y).sum(), (y * y).sum()]
    assert np.allclose(got, want, rtol=1e-13, atol=0)


@needs_ext
@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3000), st.integers(0, 2**32 - 1))
def test_backends_agree(n, seed):
    y, x, t = columns(n, seed)
    a = _ckernels.trigger_sums(y, x, t)
    b = _pykernels.trigger_sums(y, x, t)
    assert np.allclose(a, b, rtol=1e-11, atol=1e-11)
    ssr_c = _ckernels.ssr_trigger(y, x, t, 0.5, -1.0, 2.0)
    ssr_p = _pykernels.ssr_trigger(y, x, t, 0.5, -1.0, 2.0)
    assert math.isclose(ssr_c, ssr_p, rel_tol=1e-11)
    assert math.isclose(_ckernels.ssr_baseline(y, t, 0.2, 0.3),
                        _pykernels.ssr_baseline(y, t, 0.2, 0.3), rel_tol=1e-11)


def test_wrappers_accept_lists_and_other_dtypes():
    s = kernels.trigger_sums([1, 2, 3], [0, 1, 1], np.array([0, 1, 0], dtype=np.int64))
    assert s[0] == 3 and s[1] == 1 and s[7] == 2
    assert kernels.ssr_baseline([1.0, 3.0], [0, 1], 1.0, 2.0) == 0.0


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")
    if _ckernels is not None and os.environ.get("TRIGEVAL_PURE") != "1":
        assert kernels.BACKEND == "cython"


def test_pure_fallback_selected_by_env():
    code = "import trigeval.kernels as k; print(k.BACKEND)"
    env = {**os.environ, "TRIGEVAL_PURE": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"


def test_fits_identical_across_backends():
    code = ("import json, trigeval as t; ds = t.generate_dataset(t.GenConfig(n_units=500, seed=2));"
            "print(json.dumps([t.fit(ds, m).ate for m in ('baseline', 'full')]))")
    outs = []
    for pure in ("0", "1"):
        env = {**os.environ, "TRIGEVAL_PURE": pure}
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                             text=True, check=True)
        outs.append(np.array(json.loads(res.stdout)))
    assert np.allclose(outs[0], outs[1], rtol=1e-10, atol=1e-13)
