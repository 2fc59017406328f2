"""Hot inner loops, each in a numba and a pure-numpy flavour.

The public names (``min_filter``, ``window_mean``, ``hsv_to_rgb``, ``conv3x3``,
``conv3x3_weight_grad``) point at the numba versions unless numba is missing
or ``MONOLAYER_NUMBA=0``. Both flavours are kept importable as ``*_nb`` /
``*_np`` so tests and benchmarks can compare them directly.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._accel import USE_NUMBA, njit


# -- sliding minimum over a clipped square neighbourhood ----------------------

def min_filter_np(img, size):
    img = np.asarray(img, dtype=np.float64)
    r = size // 2
    padded = np.pad(img, r, mode="constant", constant_values=np.inf)
    return sliding_window_view(padded, (size, size)).min(axis=(-2, -1))


@njit
def min_filter_nb(img, size):
    h, w = img.shape
    r = size // 2
    # separable: rows then columns
    tmp = np.empty((h, w))
    for i in range(h):
        for j in range(w):
            m = np.inf
            for jj in range(max(0, j - r), min(w, j + r + 1)):
                if img[i, jj] < m:
                    m = img[i, jj]
            tmp[i, j] = m
    out = np.empty((h, w))
    for i in range(h):
        for j in range(w):
            m = np.inf
            for ii in range(max(0, i - r), min(h, i + r + 1)):
                if tmp[ii, j] < m:
                    m = tmp[ii, j]
            out[i, j] = m
    return out


# -- mean over a clipped square window, batched over leading axis -------------

def window_mean_np(stack, size):
    """Mean of each ``size`` x ``size`` window clipped to the image, for a
    stack of shape (K, H, W)."""
    stack = np.asarray(stack, dtype=np.float64)
    k, h, w = stack.shape
    r = size // 2
    integral = np.zeros((k, h + 1, w + 1))
    integral[:, 1:, 1:] = stack.cumsum(axis=1).cumsum(axis=2)
    i0 = np.clip(np.arange(h) - r, 0, h)
    i1 = np.clip(np.arange(h) + r + 1, 0, h)
    j0 = np.clip(np.arange(w) - r, 0, w)
    j1 = np.clip(np.arange(w) + r + 1, 0, w)
    sums = (integral[:, i1[:, None], j1[None, :]] - integral[:, i0[:, None], j1[None, :]]
            - integral[:, i1[:, None], j0[None, :]] + integral[:, i0[:, None], j0[None, :]])
    counts = (i1 - i0)[:, None] * (j1 - j0)[None, :]
    return sums / counts


@njit
def window_mean_nb(stack, size):
    k, h, w = stack.shape
    r = size // 2
    out = np.empty((k, h, w))
    integral = np.zeros((h + 1, w + 1))
    for c in range(k):
        for i in range(h):
            row = 0.0
            for j in range(w):
                row += stack[c, i, j]
                integral[i + 1, j + 1] = integral[i, j + 1] + row
        for i in range(h):
            i0 = max(0, i - r)
            i1 = min(h, i + r + 1)
            for j in range(w):
                j0 = max(0, j - r)
                j1 = min(w, j + r + 1)
                s = integral[i1, j1] - integral[i0, j1] - integral[i1, j0] + integral[i0, j0]
                out[c, i, j] = s / ((i1 - i0) * (j1 - j0))
    return out


# -- hexcone HSV -> RGB -------------------------------------------------------

def hsv_to_rgb_np(h, s, v):
    """Flat float arrays in, (n, 3) out."""
    h6 = (h % 1.0) * 6.0
    out = np.empty(h.shape + (3,))
    for c, n in enumerate((5.0, 3.0, 1.0)):
        k = (n + h6) % 6.0
        out[..., c] = v - v * s * np.clip(np.minimum(k, 4.0 - k), 0.0, 1.0)
    return out


@njit
def hsv_to_rgb_nb(h, s, v):
    n = h.shape[0]
    out = np.empty((n, 3))
    for i in range(n):
        h6 = (h[i] % 1.0) * 6.0
        sector = int(np.floor(h6))
        frac = h6 - sector
        sector = sector % 6
        vi, si = v[i], s[i]
        p = vi * (1.0 - si)
        q = vi * (1.0 - si * frac)
        t = vi * (1.0 - si * (1.0 - frac))
        if sector == 0:
            r, g, b = vi, t, p
        elif sector == 1:
            r, g, b = q, vi, p
        elif sector == 2:
            r, g, b = p, vi, t
        elif sector == 3:
            r, g, b = p, q, vi
        elif sector == 4:
            r, g, b = t, p, vi
        else:
            r, g, b = vi, p, q
        out[i, 0] = r
        out[i, 1] = g
        out[i, 2] = b
    return out


# -- 3x3 convolution, stride 1, zero padding ----------------------------------

def conv3x3_np(x, weight, bias):
    """x: (N, H, W, C), weight: (3, 3, C, F), bias: (F,) -> (N, H, W, F)."""
    padded = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    patches = sliding_window_view(padded, (3, 3), axis=(1, 2))  # N,H,W,C,3,3
    return np.einsum("nhwcij,ijcf->nhwf", patches, weight, optimize=True) + bias


def conv3x3_weight_grad_np(x, dout):
    """Gradient of sum(dout * conv3x3(x, W, b)) w.r.t. W and b."""
    padded = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    patches = sliding_window_view(padded, (3, 3), axis=(1, 2))
    dw = np.einsum("nhwcij,nhwf->ijcf", patches, dout, optimize=True)
    return dw, dout.sum(axis=(0, 1, 2))


@njit
def conv3x3_nb(x, weight, bias):
    n, h, w, c = x.shape
    f = weight.shape[3]
    out = np.empty((n, h, w, f))
    for s in range(n):
        for i in range(h):
            for j in range(w):
                for o in range(f):
                    acc = bias[o]
                    for di in range(3):
                        ii = i + di - 1
                        if ii < 0 or ii >= h:
                            continue
                        for dj in range(3):
                            jj = j + dj - 1
                            if jj < 0 or jj >= w:
                                continue
                            for ch in range(c):
                                acc += x[s, ii, jj, ch] * weight[di, dj, ch, o]
                    out[s, i, j, o] = acc
    return out


@njit
def conv3x3_weight_grad_nb(x, dout):
    n, h, w, c = x.shape
    f = dout.shape[3]
    dw = np.zeros((3, 3, c, f))
    db = np.zeros(f)
    for s in range(n):
        for i in range(h):
            for j in range(w):
                g = dout[s, i, j]
                for o in range(f):
                    db[o] += g[o]
                for di in range(3):
                    ii = i + di - 1
                    if ii < 0 or ii >= h:
                        continue
                    for dj in range(3):
                        jj = j + dj - 1
                        if jj < 0 or jj >= w:
                            continue
                        for ch in range(c):
                            xv = x[s, ii, jj, ch]
                            for o in range(f):
                                dw[di, dj, ch, o] += xv * g[o]
    return dw, db


def _pick(nb, np_):
    return nb if USE_NUMBA else np_


_min_filter = _pick(min_filter_nb, min_filter_np)
_window_mean = _pick(window_mean_nb, window_mean_np)
_hsv_to_rgb = _pick(hsv_to_rgb_nb, hsv_to_rgb_np)
_conv3x3 = _pick(conv3x3_nb, conv3x3_np)
_conv3x3_weight_grad = _pick(conv3x3_weight_grad_nb, conv3x3_weight_grad_np)


def min_filter(img, size):
    return _min_filter(np.ascontiguousarray(img, dtype=np.float64), int(size))


def window_mean(stack, size):
    return _window_mean(np.ascontiguousarray(stack, dtype=np.float64), int(size))


def hsv_to_rgb(h, s, v):
    h, s, v = np.broadcast_arrays(*(np.asarray(a, dtype=np.float64) for a in (h, s, v)))
    shape = h.shape
    flat = [np.ascontiguousarray(a).reshape(-1) for a in (h, s, v)]
    return _hsv_to_rgb(*flat).reshape(shape + (3,))


def conv3x3(x, weight, bias):
    return _conv3x3(np.ascontiguousarray(x, dtype=np.float64),
                    np.ascontiguousarray(weight, dtype=np.float64),
                    np.ascontiguousarray(bias, dtype=np.float64))


def conv3x3_weight_grad(x, dout):
    return _conv3x3_weight_grad(np.ascontiguousarray(x, dtype=np.float64),
                                np.ascontiguousarray(dout, dtype=np.float64))
