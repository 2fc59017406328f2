"""The M6 layer: monogenic phase/orientation encoded as two RGB images.

Forward flow for one grayscale image I::

    I -> (I', I1, I2) -> phase, orientation, |I_R|
      -> min-max normalise each map independently
      -> HSV(phase', |I_R|', 1) and HSV(orientation', |I_R|', 1)
      -> RGB, RGB  (six channels)
"""
from dataclasses import astuple, dataclass, replace

import numpy as np

from .imagecore import hsv_to_rgb, normalize_minmax, to_grayscale_mean
from .spectral import (
    frequency_grid,
    local_orientation,
    local_phase,
    log_gabor,
    log_gabor_derivatives,
    monogenic_transform,
)

PARAM_NAMES = ("s", "f", "omega", "sigma")
ENCODINGS = {"rgb": 6, "hsv": 6, "phases": 2}

# post-step box constraints
BOUNDS = {"s": (-4.0, 4.0), "f": (1e-3, 1e3), "omega": (1e-3, 1e3), "sigma": (1e-3, 0.999)}


@dataclass(frozen=True)
class M6Params:
    s: float
    f: float
    omega: float
    sigma: float

    def __post_init__(self):
        if not all(np.isfinite(astuple(self))):
            raise ValueError(f"non-finite M6 parameters: {self}")

    def as_array(self):
        return np.array(astuple(self), dtype=np.float64)

    @classmethod
    def from_array(cls, arr):
        return cls(*(float(v) for v in arr))

    def clamped(self):
        return replace(self, **{k: float(np.clip(getattr(self, k), *BOUNDS[k])) for k in PARAM_NAMES})


def m6_init():
    return M6Params(s=1.0, f=1.0, omega=1.0, sigma=0.33)


@dataclass(frozen=True)
class M6Output:
    rgb_phi: np.ndarray    # (..., H, W, 3)
    rgb_theta: np.ndarray  # (..., H, W, 3)

    def stack(self):
        return np.concatenate([self.rgb_phi, self.rgb_theta], axis=-1)


def _gray_maps(img):
    """(H, W[, C]) or (N, H, W, C) -> (..., H, W) grayscale maps."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    if img.ndim not in (3, 4):
        raise ValueError(f"expected (H, W[, C]) or (N, H, W, C), got {img.shape}")
    return to_grayscale_mean(img)[..., 0]


def _encode(resp, encoding):
    hw = (-2, -1)
    mag = resp.riesz_magnitude
    phi = normalize_minmax(local_phase(resp, mag), axis=hw)
    theta = normalize_minmax(local_orientation(resp), axis=hw)
    sat = normalize_minmax(mag, axis=hw)
    if encoding == "phases":
        return np.stack([phi, theta], axis=-1)
    ones = np.ones_like(sat)
    if encoding == "hsv":
        return np.stack([phi, sat, ones, theta, sat, ones], axis=-1)
    if encoding == "rgb":
        return np.concatenate([hsv_to_rgb(phi, sat, ones), hsv_to_rgb(theta, sat, ones)], axis=-1)
    raise ValueError(f"unknown encoding {encoding!r}; choose from {sorted(ENCODINGS)}")


def m6_features(img, params, encoding="rgb", filt=None):
    """Feature tensor (..., H, W, n) with n = 6 for 'rgb'/'hsv', 2 for 'phases'."""
    return _encode(monogenic_transform(_gray_maps(img), params, filt=filt), encoding)


def m6_forward(img, params):
    """Run the layer and split the six channels into the two RGB images."""
    feats = m6_features(img, params, "rgb")
    return M6Output(feats[..., :3], feats[..., 3:])


class NonFiniteLossError(FloatingPointError):
    pass


def fd_steps(params, rel=1e-4, floor=1e-5):
    return np.maximum(rel * np.abs(params.as_array()), floor)


def param_gradient(fn, params, rel=1e-4, floor=1e-5):
    """Central-difference gradient of a scalar ``fn(M6Params)``."""
    base = params.as_array()
    steps = fd_steps(params, rel, floor)
    grad = np.empty(4)
    for i, name in enumerate(PARAM_NAMES):
        vals = []
        for sign in (1.0, -1.0):
            p = base.copy()
            p[i] += sign * steps[i]
            val = float(fn(M6Params.from_array(p)))
            if not np.isfinite(val):
                raise NonFiniteLossError(f"loss is {val} at {name}{'+' if sign > 0 else '-'}h")
            vals.append(val)
        grad[i] = (vals[0] - vals[1]) / (2.0 * steps[i])
    return grad


def m6_param_grads(batch, params, loss_fn, encoding="rgb"):
    """d loss / d (s, f, omega, sigma) by central differences (8 forwards)."""
    return param_gradient(lambda q: loss_fn(m6_features(batch, q, encoding)), params)


def filter_chain_grads(batch, params, loss_fn, encoding="rgb"):
    """Same gradient, but differentiating the log-Gabor analytically and only
    probing the rest of the pipeline along each dG/dp direction."""
    gray = _gray_maps(batch)
    grid = frequency_grid(*gray.shape[-2:])
    g = log_gabor(grid, params)
    dg = log_gabor_derivatives(grid, params)
    steps = fd_steps(params)
    grad = np.empty(4)
    for i in range(4):
        plus = loss_fn(m6_features(batch, params, encoding, filt=g + steps[i] * dg[i]))
        minus = loss_fn(m6_features(batch, params, encoding, filt=g - steps[i] * dg[i]))
        grad[i] = (plus - minus) / (2.0 * steps[i])
    return grad
