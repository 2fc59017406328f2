"""Fourier-domain monogenic signal.

All maps here are 2-D float arrays of shape (..., H, W); leading axes are
treated as a batch. Frequencies live on the unshifted FFT grid in cycles per
pixel, so bin (0, 0) is DC and no fftshift is ever needed.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

RESIDUE_TOL = 1e-8


class FrequencyGrid(NamedTuple):
    u1: np.ndarray  # horizontal (column) frequency, shape (H, W)
    u2: np.ndarray  # vertical (row) frequency, shape (H, W)

    @property
    def radius(self):
        return np.hypot(self.u1, self.u2)


@lru_cache(maxsize=32)
def _grid(h, w):
    u2, u1 = np.meshgrid(np.fft.fftfreq(h), np.fft.fftfreq(w), indexing="ij")
    u1.setflags(write=False)
    u2.setflags(write=False)
    return FrequencyGrid(u1, u2)


def frequency_grid(h, w):
    """Normalised frequencies in [-0.5, 0.5) laid out like ``np.fft.fft2``."""
    return _grid(int(h), int(w))


def dft2(img):
    """Unnormalised forward 2-D DFT over the last two axes."""
    return np.fft.fft2(np.asarray(img, dtype=np.float64))


def idft2(spec):
    """Inverse of :func:`dft2` (carries the 1/(H*W) factor)."""
    return np.fft.ifft2(spec)


def riesz_kernels(grid):
    """Riesz transfer functions u/|u| for both axes, zero at DC."""
    r = grid.radius
    safe = np.where(r > 0, r, 1.0)
    h1 = np.where(r > 0, grid.u1 / safe, 0.0)
    h2 = np.where(r > 0, grid.u2 / safe, 0.0)
    return h1, h2


def center_frequency(params):
    """Radius of the log-Gabor peak, 1 / (omega * f**(s-1))."""
    return 1.0 / (params.omega * params.f ** (params.s - 1.0))


def _log_ratio(grid, params):
    r = grid.radius
    safe = np.where(r > 0, r, 1.0)
    return np.log(safe) + np.log(params.omega) + (params.s - 1.0) * np.log(params.f), r > 0


def log_gabor(grid, params):
    """Radial log-Gabor filter with a zero DC bin and unit peak."""
    lr, nonzero = _log_ratio(grid, params)
    ls = np.log(params.sigma)
    return np.where(nonzero, np.exp(-lr * lr / (2.0 * ls * ls)), 0.0)


def log_gabor_derivatives(grid, params):
    """Analytic partial derivatives of :func:`log_gabor` with respect to
    (s, f, omega, sigma), in that order, as a (4, H, W) array."""
    lr, nonzero = _log_ratio(grid, params)
    ls = np.log(params.sigma)
    g = np.where(nonzero, np.exp(-lr * lr / (2.0 * ls * ls)), 0.0)
    dg_dlr = -g * lr / (ls * ls)
    return np.stack([
        dg_dlr * np.log(params.f),
        dg_dlr * (params.s - 1.0) / params.f,
        dg_dlr / params.omega,
        g * lr * lr / (params.sigma * ls ** 3),
    ])


def _odd_kernels(grid):
    """Riesz kernels made Hermitian-consistent for real inputs.

    The Nyquist column (row) of an even-sized grid is its own mirror image,
    so an odd kernel along that axis must vanish there. Zeroing it is the
    same as keeping only the real part of the inverse transform.
    """
    h1, h2 = riesz_kernels(grid)
    h, w = grid.u1.shape
    if w % 2 == 0:
        h1 = h1.copy()
        h1[:, w // 2] = 0.0
    if h % 2 == 0:
        h2 = h2.copy()
        h2[h // 2, :] = 0.0
    return h1, h2


@dataclass(frozen=True)
class MonogenicResponse:
    i_prime: np.ndarray  # band-passed signal
    i1: np.ndarray       # Riesz component along x
    i2: np.ndarray       # Riesz component along y

    @property
    def riesz_magnitude(self):
        return np.sqrt(self.i1 * self.i1 + self.i2 * self.i2)


def _real_part(z, what):
    re = z.real
    residue = np.abs(z.imag).max(initial=0.0)
    if residue > RESIDUE_TOL * max(1.0, np.abs(re).max(initial=0.0)):
        raise FloatingPointError(f"{what}: imaginary residue {residue:.3g} after inverse FFT")
    return re


def monogenic_from_spectrum(spectrum, filt):
    """Monogenic triple from a precomputed spectrum J and radial filter G.

    The Riesz branches use -i*H so that a cosine maps to a sine; the real
    parts of the inverse transforms are returned.
    """
    h, w = spectrum.shape[-2:]
    h1, h2 = _odd_kernels(frequency_grid(h, w))
    jg = spectrum * filt
    return MonogenicResponse(
        _real_part(idft2(jg), "I'"),
        _real_part(idft2(jg * (-1j * h1)), "I1"),
        _real_part(idft2(jg * (-1j * h2)), "I2"),
    )


def monogenic_transform(img, params, filt=None):
    """Band-passed signal and Riesz pair of ``img`` (shape (..., H, W)).

    ``filt`` overrides the log-Gabor built from ``params``. Constant images
    yield exact zeros.
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[-2:]
    if filt is None:
        filt = log_gabor(frequency_grid(h, w), params)
    resp = monogenic_from_spectrum(dft2(img), filt)
    flat = (img.max(axis=(-2, -1)) == img.min(axis=(-2, -1)))[..., None, None]
    if np.any(flat):
        resp = MonogenicResponse(*(np.where(flat, 0.0, a) for a in (resp.i_prime, resp.i1, resp.i2)))
    return resp


def local_amplitude(m):
    return np.sqrt(m.i_prime ** 2 + m.i1 ** 2 + m.i2 ** 2)


def local_phase(m, riesz_magnitude=None):
    """Elevation of the monogenic vector, atan2(I', |I_R|), in [-pi/2, pi/2]."""
    mag = m.riesz_magnitude if riesz_magnitude is None else riesz_magnitude
    return np.arctan2(m.i_prime, mag)


def local_orientation(m):
    """atan(-I2 / I1); +-pi/2 where I1 == 0 and 0 where both vanish."""
    i1, i2 = m.i1, m.i2
    zero = i1 == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = np.arctan(-i2 / np.where(zero, 1.0, i1))
    return np.where(zero, np.sign(-i2) * (np.pi / 2), theta)


def analytic_signal_1d(f):
    """Analytic signal of a real sequence via the one-sided spectrum."""
    f = np.asarray(f, dtype=np.float64)
    n = f.shape[-1]
    if n < 4:
        raise ValueError("need at least 4 samples")
    weights = np.zeros(n)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[1:n // 2] = 2.0
        weights[n // 2] = 1.0
    else:
        weights[1:(n + 1) // 2] = 2.0
    return np.fft.ifft(np.fft.fft(f) * weights)
