import os
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ballinterp import _accel
from ballinterp.geometry import uniform_ball

pytestmark = pytest.mark.skipif(_accel.NUMBA is None, reason="numba not installed")


def test_moebius_backends_agree(rng):
    a = uniform_ball(rng, 1, 3, 0.9)[0]
    Z = uniform_ball(rng, 200, 3)
    assert_allclose(_accel.NUMBA.moebius(a, Z), _accel.NUMPY.moebius(a, Z), atol=1e-14)


@pytest.mark.parametrize("s", [3.0, 2.5])
def test_kernel_block_backends_agree(rng, s):
    Z = uniform_ball(rng, 50, 2)
    W = uniform_ball(rng, 40, 2)
    vals = rng.standard_normal((40, 3)) + 1j * rng.standard_normal((40, 3))
    out_nb, min_nb = _accel.NUMBA.kernel_block(Z, W, vals, s)
    out_np, min_np = _accel.NUMPY.kernel_block(Z, W, vals, s)
    assert_allclose(out_nb, out_np, rtol=1e-12)
    assert_allclose(min_nb, min_np, rtol=1e-14)


def test_gleason_block_backends_agree(rng):
    Z = np.vstack([uniform_ball(rng, 30, 2), np.array([[1e-9, 0.0]])])
    W = uniform_ball(rng, 25, 2)
    vals = rng.standard_normal((25, 2)) + 0j
    out_nb, _ = _accel.NUMBA.gleason_block(Z, W, vals, 4.0)
    out_np, _ = _accel.NUMPY.gleason_block(Z, W, vals, 4.0)
    assert_allclose(out_nb, out_np, rtol=1e-12)


def test_poly_eval_backends_agree(rng):
    Z = uniform_ball(rng, 60, 2)
    exps = rng.integers(0, 5, (12, 2))
    coefs = rng.standard_normal(12) + 1j * rng.standard_normal(12)
    expect = np.sum(coefs * np.prod(Z[:, None, :] ** exps[None, :, :], axis=2), axis=1)
    assert_allclose(_accel.NUMPY.poly_eval(Z, exps, coefs), expect, rtol=1e-12)
    assert_allclose(_accel.NUMBA.poly_eval(Z, exps, coefs), expect, rtol=1e-12)


def test_window_counts_closed_windows():
    dist = np.array([[0.1, 0.2, 0.2, 0.5]])
    masses = np.array([1.0, 2.0, 3.0, 4.0])
    t = np.array([0.05, 0.1, 0.2, 1.0])
    for be in (_accel.NUMPY, _accel.NUMBA):
        assert_allclose(be.window_counts(dist, masses, t), [[0.0, 1.0, 6.0, 10.0]])


def test_environment_switch():
    code = "from ballinterp import _accel; print(_accel.backend() is _accel.NUMPY)"
    env = dict(os.environ, BALLINTERP_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True)
    assert out.stdout.strip() == "True"
