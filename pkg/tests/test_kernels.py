import os
import subprocess
import sys

import numpy as np
import pytest

from glowgan import kernels

IMPLS = kernels.implementations()
needs_ext = pytest.mark.skipif("cython" not in IMPLS, reason="compiled extension not built")


def _inputs(seed, b=5, n=40):
    rng = np.random.default_rng(seed)
    r = np.exp2(rng.uniform(-8, 6, (b, n)))
    r[0, :3] = [0.0, 1.0, 2.0]
    factor = np.exp2(rng.normal(0, 1, b) / 2)
    factor[0] = 1.0  # r == 1 lands exactly on the clip
    beta = rng.uniform(0.3, 1.0, b)
    gamma = rng.uniform(0.6, 1.3, b)
    return r, factor, beta, gamma


@needs_ext
@pytest.mark.parametrize("seed", range(5))
def test_forward_and_vjp_agree(seed):
    r, f, b, g = _inputs(seed)
    go = np.random.default_rng(seed + 100).normal(size=r.shape)
    fwd = {k: kernels.camera_forward(r, f, b, g, impl=m) for k, m in IMPLS.items()}
    vjp = {k: kernels.camera_vjp(r, f, b, g, go, impl=m) for k, m in IMPLS.items()}
    np.testing.assert_allclose(fwd["cython"], fwd["numpy"], rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(vjp["cython"][0], vjp["numpy"][0], rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(vjp["cython"][1], vjp["numpy"][1], rtol=1e-12, atol=1e-14)


@needs_ext
def test_mask_and_merge_agree():
    rng = np.random.default_rng(7)
    ldr = rng.uniform(0.9, 1.0, (6, 6, 3))
    ldr[0, 0] = 1.0
    np.testing.assert_allclose(
        kernels.soft_mask(ldr, 0.97, impl=IMPLS["cython"]), kernels.soft_mask(ldr, 0.97, impl=IMPLS["numpy"]), atol=1e-15
    )
    stack = np.round(rng.uniform(0, 1, (4, 50)) * 255) / 255
    stack[:, 0] = 1.0
    factor = np.exp2(np.array([-2.0, -1.0, 0.0, 1.0]))
    a = kernels.merge_stack(stack, factor, 0.6, 0.9, 1 - 0.5 / 255, impl=IMPLS["cython"])
    b = kernels.merge_stack(stack, factor, 0.6, 0.9, 1 - 0.5 / 255, impl=IMPLS["numpy"])
    np.testing.assert_allclose(a, b, rtol=1e-13)


def test_forward_examples():
    for impl in IMPLS.values():
        out = kernels.camera_forward(np.array([[0.0, 1.0, 5.0]]), 1.0, 0.6, 0.9, impl=impl)
        np.testing.assert_array_equal(out, [[0.0, 1.0, 1.0]])


def test_vjp_clip_subgradient():
    # slope of the clip is taken as 1 at x == 1 and 0 above
    for impl in IMPLS.values():
        gr, ge = kernels.camera_vjp(np.array([[1.0, 1.5]]), 1.0, 0.6, 0.9, np.ones((1, 2)), impl=impl)
        crf_slope = 1.6 * 0.9 * 0.6 / 1.6**2
        assert gr[0, 0] == pytest.approx(crf_slope, rel=1e-12)
        assert gr[0, 1] == 0.0
        assert ge[0] == pytest.approx(crf_slope * np.log(2) / 2, rel=1e-12)


def test_per_row_broadcast():
    r = np.full((3, 4), 0.25)
    out = kernels.camera_forward(r, np.array([1.0, 2.0, 4.0]), 0.6, 0.9)
    assert out[0, 0] < out[1, 0] < out[2, 0] == 1.0


def test_env_forces_numpy_fallback():
    env = dict(os.environ, GLOWGAN_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from glowgan import kernels; print(kernels.BACKEND, sorted(kernels.implementations()))"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.split()[0] == "numpy"
