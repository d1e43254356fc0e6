import os
import subprocess
import sys

import numpy as np
import pytest

from subfuse import _pykernels

from conftest import BACKENDS


def _backend_under(env_value):
    env = dict(os.environ)
    env.pop("SUBFUSE_PURE", None)
    if env_value is not None:
        env["SUBFUSE_PURE"] = env_value
    out = subprocess.run([sys.executable, "-c", "import subfuse.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    return out.stdout.strip()


def test_pure_flag_forces_python():
    assert _backend_under("1") == "python"


def test_default_prefers_compiled():
    expected = "cython" if "cython" in BACKENDS else "python"
    assert _backend_under(None) == expected
    assert _backend_under("0") == expected


def test_hungarian_potentials_are_feasible():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = int(rng.integers(1, 8))
        cost = rng.integers(0, 20, size=(n, n)).astype(float)
        col, u, v = _pykernels.hungarian(cost)
        reduced = cost - np.asarray(u)[:, None] - np.asarray(v)[None, :]
        assert reduced.min() >= -1e-9
        assert all(abs(reduced[i, col[i]]) <= 1e-9 for i in range(n))


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")
def test_hungarian_backends_agree():
    rng = np.random.default_rng(4)
    for _ in range(100):
        n = int(rng.integers(1, 9))
        cost = rng.integers(0, 10, size=(n, n)).astype(float)
        cp, up, vp = BACKENDS["python"].hungarian(cost)
        cc, uc, vc = BACKENDS["cython"].hungarian(cost)
        assert list(cp) == list(cc)
        assert np.allclose(up, uc) and np.allclose(vp, vc)
