"""Structural similarity (SSIM) maps and indexes."""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .degrade import DegradationSpec, degrade
from .kernels import window_mean
from .m6 import m6_forward

K1, K2 = 0.01, 0.03
WINDOW = 7


class SsimParams(NamedTuple):
    k1: float
    k2: float
    L: float
    window: object  # int side length, or "gaussian", or "global"


@dataclass(frozen=True)
class SsimResult:
    index: float
    map: np.ndarray
    params: SsimParams


def _as_maps(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim >= 3 and x.shape[-1] == 1:
        x = x[..., 0]
    return x


def _combine(mx, my, vx, vy, cxy, c1, c2):
    num = (2.0 * mx * my + c1) * (2.0 * cxy + c2)
    den = (mx * mx + my * my + c1) * (vx + vy + c2)
    return num / den


def ssim_maps(x, y, L=1.0, window=WINDOW):
    """SSIM maps for stacks of shape (..., H, W) using a uniform window
    clipped at the borders."""
    x, y = _as_maps(x), _as_maps(y)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    lead, hw = x.shape[:-2], x.shape[-2:]
    xs, ys = x.reshape(-1, *hw), y.reshape(-1, *hw)
    n = xs.shape[0]
    m = window_mean(np.concatenate([xs, ys, xs * xs, ys * ys, xs * ys]), window)
    mx, my, exx, eyy, exy = (m[i * n:(i + 1) * n] for i in range(5))
    c1, c2 = (K1 * L) ** 2, (K2 * L) ** 2
    out = _combine(mx, my, exx - mx * mx, eyy - my * my, exy - mx * my, c1, c2)
    return out.reshape(*lead, *hw)


def _gaussian_map(x, y, L, sigma=1.5):
    def blur(a):
        # normalised convolution keeps the clipped-border convention
        num = ndimage.gaussian_filter(a, sigma, mode="constant", truncate=3.5)
        den = ndimage.gaussian_filter(np.ones_like(a), sigma, mode="constant", truncate=3.5)
        return num / den

    mx, my = blur(x), blur(y)
    c1, c2 = (K1 * L) ** 2, (K2 * L) ** 2
    return _combine(mx, my, blur(x * x) - mx * mx, blur(y * y) - my * my, blur(x * y) - mx * my, c1, c2)


def ssim_global(x, y, L=1.0):
    """Single-window SSIM over the whole image."""
    x, y = _as_maps(x), _as_maps(y)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    mx, my = x.mean(), y.mean()
    return float(_combine(mx, my, x.var(), y.var(), ((x - mx) * (y - my)).mean(), (K1 * L) ** 2, (K2 * L) ** 2))


def ssim(x, y, L=1.0, window=WINDOW):
    """SSIM of two single-channel images.

    ``window`` is the side of the uniform sliding window (7 by default),
    ``"gaussian"`` for an 11-tap sigma=1.5 Gaussian, or ``"global"``.
    """
    if L <= 0:
        raise ValueError("dynamic range L must be positive")
    params = SsimParams(K1, K2, float(L), window)
    x, y = _as_maps(x), _as_maps(y)
    if x.ndim != 2 or x.shape != y.shape:
        raise ValueError(f"expected two equal (H, W) images, got {x.shape} and {y.shape}")
    if window == "global":
        v = ssim_global(x, y, L)
        return SsimResult(v, np.full(x.shape, v), params)
    smap = _gaussian_map(x, y, L) if window == "gaussian" else ssim_maps(x, y, L, int(window))
    return SsimResult(float(smap.mean()), smap, params)


def luminance(img):
    """Channel mean, as an (..., H, W) map."""
    return np.asarray(img, dtype=np.float64).mean(axis=-1)


def ssim_m6_comparison(img, spec, params, index=0):
    """SSIM between an image and its degradation, before and after M6.

    Returns (raw, phi, theta) results; colour images are compared through
    their channel mean.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = img[..., None]
    degraded, _ = degrade(img, spec, index)
    ref, deg = m6_forward(img, params), m6_forward(degraded, params)
    return (
        ssim(luminance(img), luminance(degraded)),
        ssim(luminance(ref.rgb_phi), luminance(deg.rgb_phi)),
        ssim(luminance(ref.rgb_theta), luminance(deg.rgb_theta)),
    )


def ssim_m6_batch(images, spec, params):
    """Vectorised :func:`ssim_m6_comparison` over a (N, H, W, C) batch.

    Returns three length-N arrays of indexes (raw, phi, theta).
    """
    images = np.asarray(images, dtype=np.float64)
    degraded = np.stack([degrade(img, spec, i)[0] for i, img in enumerate(images)])
    ref, deg = m6_forward(images, params), m6_forward(degraded, params)
    pairs = (
        (luminance(images), luminance(degraded)),
        (luminance(ref.rgb_phi), luminance(deg.rgb_phi)),
        (luminance(ref.rgb_theta), luminance(deg.rgb_theta)),
    )
    return tuple(ssim_maps(a, b).mean(axis=(-2, -1)) for a, b in pairs)


__all__ = ["SsimResult", "SsimParams", "ssim", "ssim_maps", "ssim_global", "ssim_m6_comparison",
           "ssim_m6_batch", "luminance", "DegradationSpec"]
