"""Contrast degradations: max-min scaling, TF-style contrast, synthetic haze.

Every degradation comes in four levels, ``d0`` (identity) to ``d3``.
Haze draws a random airlight vector; the generator for image ``index`` of a
batch is ``PCG64(SeedSequence([seed, index]))`` so any single image can be
regenerated on its own.
"""
from dataclasses import dataclass

import numpy as np

from .kernels import min_filter

KINDS = ("scale", "tf", "haze")
LEVELS = ("d0", "d1", "d2", "d3")

DARK_CHANNEL_WEIGHT = 0.95
AIRLIGHT_RANGE = (0.8, 1.0)

_PRESETS = {
    "scale": {"d1": (0.3, 1.0), "d2": (0.7, 1.0), "d3": (0.9, 1.0)},
    "tf": {"d1": 0.7, "d2": 0.3, "d3": 0.1},
    "haze": {"d1": (0.5, 0.8), "d2": (0.3, 0.5), "d3": (0.0, 0.15)},
}

_KIND_ALIASES = {"scale": "scale", "s": "scale", "tf": "tf", "tfcontrast": "tf", "haze": "haze", "h": "haze"}


def canonical_kind(kind):
    try:
        return _KIND_ALIASES[str(kind).lower()]
    except KeyError:
        raise ValueError(f"unknown degradation kind {kind!r}; expected one of {KINDS}") from None


def level_params(kind, level):
    """Preset for (kind, level). ``None`` marks the d0 identity.

    scale -> (a, b) target interval; tf -> contrast factor F;
    haze -> (a, b) interval for the transmission map.
    """
    kind = canonical_kind(kind)
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}; expected one of {LEVELS}")
    if level == "d0":
        return None
    return _PRESETS[kind][level]


@dataclass(frozen=True)
class DegradationSpec:
    kind: str
    level: str
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", canonical_kind(self.kind))
        level_params(self.kind, self.level)

    @property
    def params(self):
        return level_params(self.kind, self.level)


def degrade_scale(img, a, b):
    """Map the image range affinely onto [a, b]; constant images become a."""
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    img = np.asarray(img, dtype=np.float64)
    lo, hi = img.min(), img.max()
    if hi == lo:
        return np.full_like(img, a)
    return a + (img - lo) * (b - a) / (hi - lo)


def degrade_tf(img, factor):
    """mu + F * (I - mu) with mu the global mean, clipped to [0, 1]."""
    if not 0.0 <= factor <= 1.0:
        raise ValueError(f"contrast factor must lie in [0, 1], got {factor}")
    img = np.asarray(img, dtype=np.float64)
    mu = img.mean()
    return np.clip(mu + factor * (img - mu), 0.0, 1.0)


def dark_channel(img, patch):
    """Min over channels, then min over a ``patch`` x ``patch`` neighbourhood
    clipped at the borders."""
    if patch < 1 or patch % 2 == 0:
        raise ValueError(f"patch must be a positive odd integer, got {patch}")
    img = np.asarray(img, dtype=np.float64)
    return min_filter(img.min(axis=-1), patch)[..., None]


def default_patch(img):
    return 3 if max(img.shape[:2]) <= 64 else 15


def estimate_transmission(img, airlight, patch):
    airlight = np.asarray(airlight, dtype=np.float64)
    if np.any(airlight <= 0) or np.any(airlight > 1):
        raise ValueError("airlight components must lie in (0, 1]")
    t = 1.0 - DARK_CHANNEL_WEIGHT * dark_channel(img / airlight, patch)
    return np.clip(t, 0.0, 1.0)


def apply_haze(img, transmission, airlight):
    """Scattering model t * I + (1 - t) * A, clipped to [0, 1]."""
    return np.clip(transmission * img + (1.0 - transmission) * np.asarray(airlight), 0.0, 1.0)


def to_rgb(img):
    img = np.asarray(img, dtype=np.float64)
    return np.repeat(img, 3, axis=-1) if img.shape[-1] == 1 else img


def image_rng(seed, index=0):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))


def draw_airlight(rng):
    return rng.uniform(*AIRLIGHT_RANGE, size=3)


def haze_with_airlight(img, airlight, interval, patch=None):
    """Haze ``img`` with a given airlight, the estimated transmission map
    being max-min rescaled into ``interval``."""
    rgb = to_rgb(img)
    patch = default_patch(rgb) if patch is None else patch
    t = estimate_transmission(rgb, airlight, patch)
    t = degrade_scale(t, *interval)
    return apply_haze(rgb, t, airlight)


def degrade_haze(img, level, seed, index=0, patch=None):
    """Returns the hazed RGB image and the airlight vector that was drawn."""
    interval = level_params("haze", level)
    airlight = draw_airlight(image_rng(seed, index))
    if interval is None:
        return to_rgb(img), airlight
    return haze_with_airlight(img, airlight, interval, patch), airlight


def degrade(img, spec, index=0):
    """Apply ``spec`` to one (H, W, C) image. Returns (image, airlight or None)."""
    params = spec.params
    if params is None:
        return np.asarray(img, dtype=np.float64).copy(), None
    if spec.kind == "scale":
        return degrade_scale(img, *params), None
    if spec.kind == "tf":
        return degrade_tf(img, params), None
    return degrade_haze(img, spec.level, spec.rng_seed, index)


def degrade_batch(images, spec, keep_channels=False):
    """Degrade a (N, H, W, C) batch. With ``keep_channels`` hazed grayscale
    images are averaged back to one channel so the batch shape is kept."""
    out = []
    for i, img in enumerate(images):
        d, _ = degrade(img, spec, i)
        if keep_channels and d.shape[-1] != img.shape[-1]:
            d = d.mean(axis=-1, keepdims=True)
        out.append(d)
    return np.stack(out)
