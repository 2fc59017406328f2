"""Image arrays, min-max normalisation, HSV->RGB and file I/O.

Images are plain float64 numpy arrays of shape (H, W, C) with C in {1, 3}
and nominal range [0, 1]. Batches add a leading axis.
"""
import struct
from pathlib import Path

import numpy as np
from PIL import Image as PILImage, UnidentifiedImageError

from . import kernels


class ImageError(Exception):
    """Base class for image I/O problems."""


class ImageReadError(ImageError):
    """The file could not be read or written."""


class MalformedImageError(ImageError):
    """The file exists but its contents do not decode."""


class UnsupportedBitDepthError(ImageError):
    """Only 8-bit gray/RGB rasters are supported for PNG and PPM."""


FORMATS = ("png", "ppm", "raw-f64")
_SUFFIXES = {".png": "png", ".ppm": "ppm", ".pgm": "ppm", ".pnm": "ppm", ".f64": "raw-f64", ".raw": "raw-f64"}
_RAW_HEADER = struct.Struct("<III")


def as_image(arr):
    """Validate and coerce to a float64 (H, W, C) array."""
    img = np.asarray(arr, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ValueError(f"expected an (H, W, 1|3) image, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite values")
    return img


def to_grayscale_mean(img):
    """Mean over the channel (last) axis, keeping it as a length-1 axis."""
    img = np.asarray(img, dtype=np.float64)
    if img.shape[-1] == 1:
        return img
    return img.mean(axis=-1, keepdims=True)


def normalize_minmax(img, axis=None):
    """Rescale to [0, 1] by the min and max over ``axis`` (whole array by
    default). Constant inputs map to all zeros."""
    img = np.asarray(img, dtype=np.float64)
    lo = img.min(axis=axis, keepdims=True)
    span = img.max(axis=axis, keepdims=True) - lo
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (img - lo) / safe, 0.0)


def hsv_to_rgb(h, s, v):
    """Hexcone HSV -> RGB, elementwise over broadcastable arrays.

    Hue is periodic with period 1. Returns an array with a trailing axis of
    length 3.
    """
    return kernels.hsv_to_rgb(h, s, v)


def _infer_format(path, fmt):
    if fmt is not None:
        fmt = fmt.lower()
        if fmt not in FORMATS:
            raise ValueError(f"unknown image format {fmt!r}; choose from {FORMATS}")
        return fmt
    try:
        return _SUFFIXES[Path(path).suffix.lower()]
    except KeyError:
        raise ValueError(f"cannot infer image format from {path!s}") from None


def load_image(path, fmt=None):
    """Read an image; 8-bit data is divided by 255."""
    fmt = _infer_format(path, fmt)
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ImageReadError(f"cannot read {path}: {exc}") from exc
    if fmt == "raw-f64":
        return _decode_raw(data, path)
    return _decode_8bit(data, path)


def _decode_raw(data, path):
    if len(data) < _RAW_HEADER.size:
        raise MalformedImageError(f"{path}: truncated raw-f64 header")
    h, w, c = _RAW_HEADER.unpack_from(data)
    if c not in (1, 3) or h == 0 or w == 0:
        raise MalformedImageError(f"{path}: bad raw-f64 dimensions {h}x{w}x{c}")
    expected = _RAW_HEADER.size + 8 * h * w * c
    if len(data) != expected:
        raise MalformedImageError(f"{path}: expected {expected} bytes, found {len(data)}")
    return np.frombuffer(data, dtype="<f8", offset=_RAW_HEADER.size).astype(np.float64).reshape(h, w, c)


def _decode_8bit(data, path):
    import io

    try:
        with PILImage.open(io.BytesIO(data)) as im:
            im.load()
            mode = im.mode
            if mode in ("1", "I", "I;16", "I;16B", "I;16L", "F"):
                raise UnsupportedBitDepthError(f"{path}: unsupported pixel mode {mode!r}")
            if mode == "P":
                im = im.convert("RGB")
            elif mode in ("RGBA", "RGBX", "CMYK", "YCbCr"):
                im = im.convert("RGB")
            elif mode == "LA":
                im = im.convert("L")
            arr = np.asarray(im, dtype=np.uint8)
    except (UnidentifiedImageError, SyntaxError, ValueError, OSError) as exc:
        raise MalformedImageError(f"{path}: {exc}") from exc
    return as_image(arr.astype(np.float64) / 255.0)


def quantize(img):
    return np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_image(img, path, fmt=None):
    """Write an image. PNG and PPM quantise to 8 bits; raw-f64 is lossless."""
    img = as_image(img)
    fmt = _infer_format(path, fmt)
    if fmt == "raw-f64":
        h, w, c = img.shape
        payload = _RAW_HEADER.pack(h, w, c) + img.astype("<f8").tobytes()
        try:
            Path(path).write_bytes(payload)
        except OSError as exc:
            raise ImageReadError(f"cannot write {path}: {exc}") from exc
        return
    q = quantize(img)
    pil = PILImage.fromarray(q[:, :, 0], mode="L") if q.shape[2] == 1 else PILImage.fromarray(q, mode="RGB")
    try:
        pil.save(path, format="PNG" if fmt == "png" else "PPM")
    except OSError as exc:
        raise ImageReadError(f"cannot write {path}: {exc}") from exc
