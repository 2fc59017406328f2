"""Numba kernels against their numpy twins and against plain references."""
import numpy as np
import pytest
from scipy import ndimage

from monolayer import kernels


@pytest.mark.parametrize("size", [1, 3, 15])
def test_min_filter_flavours_agree(rng, size):
    img = rng.random((20, 17))
    ref = ndimage.minimum_filter(img, size=size, mode="nearest")
    np.testing.assert_array_equal(kernels.min_filter_np(img, size), ref)
    np.testing.assert_array_equal(kernels.min_filter_nb(img, size), ref)


@pytest.mark.parametrize("size", [1, 7, 31])
def test_window_mean_flavours_agree(rng, size):
    stack = rng.random((3, 12, 14))
    a = kernels.window_mean_np(stack, size)
    b = kernels.window_mean_nb(stack, size)
    np.testing.assert_allclose(a, b, atol=1e-13)
    # direct clipped-window mean at a corner and in the interior
    r = size // 2
    for i, j in ((0, 0), (6, 7)):
        win = stack[1, max(0, i - r):i + r + 1, max(0, j - r):j + r + 1]
        assert a[1, i, j] == pytest.approx(win.mean(), abs=1e-13)


def _conv_reference(x, w, b):
    n, h, wd, c = x.shape
    out = np.zeros((n, h, wd, w.shape[3]))
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    for di in range(3):
        for dj in range(3):
            out += np.einsum("nhwc,cf->nhwf", xp[:, di:di + h, dj:dj + wd, :], w[di, dj])
    return out + b


def test_conv_flavours_agree(rng):
    x = rng.random((2, 9, 8, 3))
    w = rng.normal(size=(3, 3, 3, 6))
    b = rng.normal(size=6)
    ref = _conv_reference(x, w, b)
    np.testing.assert_allclose(kernels.conv3x3_np(x, w, b), ref, atol=1e-12)
    np.testing.assert_allclose(kernels.conv3x3_nb(x, w, b), ref, atol=1e-12)


def test_conv_weight_grad_flavours_agree(rng):
    x = rng.random((2, 7, 6, 2))
    dout = rng.normal(size=(2, 7, 6, 4))
    dout[dout < -1] = 0.0
    dw_np, db_np = kernels.conv3x3_weight_grad_np(x, dout)
    dw_nb, db_nb = kernels.conv3x3_weight_grad_nb(x, dout)
    np.testing.assert_allclose(dw_np, dw_nb, atol=1e-12)
    np.testing.assert_allclose(db_np, db_nb, atol=1e-12)


def test_conv_weight_grad_is_adjoint(rng):
    # <dout, conv(x, W)> is linear in W, so its gradient is exactly dw
    x = rng.random((1, 5, 5, 2))
    dout = rng.normal(size=(1, 5, 5, 3))
    w = rng.normal(size=(3, 3, 2, 3))
    dw, db = kernels.conv3x3_weight_grad(x, dout)
    lhs = np.sum(dout * kernels.conv3x3(x, w, np.zeros(3)))
    assert lhs == pytest.approx(np.sum(dw * w), rel=1e-12)
    np.testing.assert_allclose(db, dout.sum(axis=(0, 1, 2)))


def test_hsv_flavours_agree(rng):
    h, s, v = rng.random((3, 5000))
    h = 4 * h - 2
    np.testing.assert_allclose(kernels.hsv_to_rgb_np(h, s, v), kernels.hsv_to_rgb_nb(h, s, v), atol=1e-14)


def test_public_wrappers_accept_non_contiguous(rng):
    img = rng.random((10, 20))[:, ::2]
    np.testing.assert_array_equal(kernels.min_filter(img, 3), kernels.min_filter_np(img, 3))
