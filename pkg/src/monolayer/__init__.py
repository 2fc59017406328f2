"""Monogenic (M6) feature layer, contrast degradations and SSIM analysis."""
__version__ = "0.1.0"

from .imagecore import hsv_to_rgb, load_image, normalize_minmax, save_image, to_grayscale_mean
from .m6 import M6Output, M6Params, m6_features, m6_forward, m6_init, m6_param_grads
from .spectral import (
    MonogenicResponse,
    local_amplitude,
    local_orientation,
    local_phase,
    monogenic_transform,
)
from .degrade import DegradationSpec, degrade, level_params
from .metrics import ssim, ssim_m6_comparison

__all__ = [
    "__version__", "hsv_to_rgb", "load_image", "normalize_minmax", "save_image", "to_grayscale_mean",
    "M6Output", "M6Params", "m6_features", "m6_forward", "m6_init", "m6_param_grads",
    "MonogenicResponse", "local_amplitude", "local_orientation", "local_phase", "monogenic_transform",
    "DegradationSpec", "degrade", "level_params", "ssim", "ssim_m6_comparison",
]
