import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from monolayer.m6 import M6Params, m6_init
from monolayer.spectral import (
    FrequencyGrid,
    analytic_signal_1d,
    center_frequency,
    dft2,
    frequency_grid,
    idft2,
    local_amplitude,
    local_orientation,
    local_phase,
    log_gabor,
    log_gabor_derivatives,
    monogenic_from_spectrum,
    monogenic_transform,
    riesz_kernels,
)

OFF_INIT = M6Params(s=1.3, f=1.5, omega=1.2, sigma=0.4)


# -- brute-force reference ----------------------------------------------------

def naive_dft2(img, sign=-1.0):
    h, w = img.shape
    out = np.zeros((h, w), dtype=complex)
    for k in range(h):
        for l in range(w):
            acc = 0j
            for m in range(h):
                for n in range(w):
                    acc += img[m, n] * np.exp(sign * 2j * np.pi * (k * m / h + l * n / w))
            out[k, l] = acc
    return out


def naive_idft2(spec):
    h, w = spec.shape
    return naive_dft2(spec, sign=1.0) / (h * w)


def signed_freq(index, n):
    return index / n if index < (n + 1) // 2 else (index - n) / n


def naive_monogenic(img, params):
    """Per-bin filter and Riesz kernels, real part of the inverse transform."""
    h, w = img.shape
    peak = 1.0 / (params.omega * params.f ** (params.s - 1.0))
    spec = naive_dft2(img)
    g = np.zeros((h, w))
    r1 = np.zeros((h, w), dtype=complex)
    r2 = np.zeros((h, w), dtype=complex)
    for k in range(h):
        for l in range(w):
            v, u = signed_freq(k, h), signed_freq(l, w)
            rad = np.sqrt(u * u + v * v)
            if rad == 0:
                continue
            g[k, l] = np.exp(-np.log(rad / peak) ** 2 / (2.0 * np.log(params.sigma) ** 2))
            r1[k, l] = -1j * u / rad
            r2[k, l] = -1j * v / rad
    band = spec * g
    return tuple(naive_idft2(x).real for x in (band, band * r1, band * r2))


@pytest.mark.parametrize("shape", [(8, 8), (7, 8), (8, 5)])
@pytest.mark.parametrize("params", [m6_init(), OFF_INIT], ids=["init", "off-init"])
def test_monogenic_matches_bruteforce_dft(rng, shape, params):
    img = rng.random(shape)
    ref = naive_monogenic(img, params)
    got = monogenic_transform(img, params)
    for a, b in zip((got.i_prime, got.i1, got.i2), ref):
        assert np.max(np.abs(a - b)) <= 1e-8


def test_fft_matches_bruteforce(rng):
    img = rng.random((8, 8))
    assert np.max(np.abs(dft2(img) - naive_dft2(img))) < 1e-10


def test_fft_round_trip(rng):
    img = rng.random((3, 32, 24))
    back = idft2(dft2(img))
    assert np.max(np.abs(back.real - img)) <= 1e-10
    assert np.max(np.abs(back.imag)) <= 1e-10


def test_parseval(rng):
    img = rng.normal(size=(28, 28))
    energy = np.sum(img ** 2)
    spectral = np.sum(np.abs(dft2(img)) ** 2) / img.size
    assert abs(energy - spectral) / energy <= 1e-10


def test_frequency_grid_layout():
    grid = frequency_grid(4, 6)
    assert grid.u1.shape == (4, 6)
    np.testing.assert_array_equal(grid.u1[0], [0, 1 / 6, 2 / 6, -3 / 6, -2 / 6, -1 / 6])
    np.testing.assert_array_equal(grid.u2[:, 0], [0, 0.25, -0.5, -0.25])


def test_riesz_kernels_unit_modulus_and_odd():
    grid = frequency_grid(9, 9)
    h1, h2 = riesz_kernels(grid)
    mod = np.hypot(h1, h2)
    assert mod[0, 0] == 0.0
    off = np.ones_like(mod, dtype=bool)
    off[0, 0] = False
    np.testing.assert_allclose(mod[off], 1.0, atol=1e-15)
    # odd: H(-u) = -H(u); on an odd-sized grid index -k mirrors k
    mirror = lambda a: np.roll(a[::-1, ::-1], 1, axis=(0, 1))
    np.testing.assert_allclose(mirror(h1), -h1, atol=1e-15)
    np.testing.assert_allclose(mirror(h2), -h2, atol=1e-15)


def test_riesz_of_cosine_is_sine():
    n, k = 32, 3
    x = np.arange(n)
    wave = np.cos(2 * np.pi * k * x / n)
    params = m6_init()
    gain = log_gabor(FrequencyGrid(np.array([[k / n]]), np.zeros((1, 1))), params)[0, 0]
    horiz = monogenic_transform(np.tile(wave, (n, 1)), params)
    np.testing.assert_allclose(horiz.i_prime, gain * np.tile(wave, (n, 1)), atol=1e-12)
    np.testing.assert_allclose(horiz.i1, gain * np.tile(np.sin(2 * np.pi * k * x / n), (n, 1)), atol=1e-12)
    np.testing.assert_allclose(horiz.i2, 0.0, atol=1e-12)
    vert = monogenic_transform(np.tile(wave[:, None], (1, n)), params)
    np.testing.assert_allclose(vert.i2, gain * np.tile(np.sin(2 * np.pi * k * x / n)[:, None], (1, n)), atol=1e-12)
    np.testing.assert_allclose(vert.i1, 0.0, atol=1e-12)


@pytest.mark.parametrize("angle", [0.3, -0.7, 1.1])
def test_orientation_of_plane_wave(angle):
    n = 64
    yy, xx = np.mgrid[:n, :n]
    # integer wave vector so the wave is periodic on the grid
    kx, ky = np.round(6 * np.cos(angle)), np.round(6 * np.sin(angle))
    img = np.cos(2 * np.pi * (kx * xx + ky * yy) / n)
    m = monogenic_transform(img, m6_init())
    theta = local_orientation(m)
    expected = np.arctan(-ky / kx)
    strong = m.riesz_magnitude > 0.5 * m.riesz_magnitude.max()
    np.testing.assert_allclose(theta[strong], expected, atol=1e-9)


def test_phase_of_cosine():
    n, k = 32, 4
    x = np.arange(n)
    img = np.tile(np.cos(2 * np.pi * k * x / n), (n, 1))
    phase = local_phase(monogenic_transform(img, m6_init()))
    t = 2 * np.pi * k * x / n
    expected = np.arctan2(np.cos(t), np.abs(np.sin(t)))
    np.testing.assert_allclose(phase[0], expected, atol=1e-9)


def test_log_gabor_peak_and_dc():
    for params in (m6_init(), OFF_INIT):
        c = center_frequency(params)
        grid = FrequencyGrid(np.array([[0.0, c, c * 0.6]]), np.array([[0.0, 0.0, c * 0.8]]))
        g = log_gabor(grid, params)
        assert g[0, 0] == 0.0
        assert g[0, 1] == pytest.approx(1.0, abs=1e-15)
        assert g[0, 2] == pytest.approx(1.0, abs=1e-12)  # same radius, other direction


def test_center_frequency_formula():
    p = M6Params(s=2.0, f=4.0, omega=0.5, sigma=0.5)
    assert center_frequency(p) == pytest.approx(1.0 / (0.5 * 4.0))


def test_log_gabor_derivatives_match_finite_differences():
    grid = frequency_grid(16, 16)
    base = OFF_INIT.as_array()
    analytic = log_gabor_derivatives(grid, OFF_INIT)
    for i in range(4):
        h = 1e-6 * max(1.0, abs(base[i]))
        up, dn = base.copy(), base.copy()
        up[i] += h
        dn[i] -= h
        fd = (log_gabor(grid, M6Params.from_array(up)) - log_gabor(grid, M6Params.from_array(dn))) / (2 * h)
        np.testing.assert_allclose(analytic[i], fd, rtol=1e-6, atol=1e-8)


def test_constant_image_gives_exact_zeros():
    m = monogenic_transform(np.full((16, 12), 0.37), m6_init())
    for a in (m.i_prime, m.i1, m.i2):
        assert np.all(a == 0.0)
    assert np.all(local_orientation(m) == 0.0)
    assert np.all(local_phase(m) == 0.0)


def test_batch_matches_single(rng):
    imgs = rng.random((3, 10, 12))
    batch = monogenic_transform(imgs, OFF_INIT)
    for i in range(3):
        one = monogenic_transform(imgs[i], OFF_INIT)
        np.testing.assert_allclose(batch.i1[i], one.i1, atol=1e-15)


def test_imaginary_residue_is_detected():
    spec = np.zeros((8, 8), dtype=complex)
    spec[0, 1] = 1.0  # no conjugate partner: output is genuinely complex
    with pytest.raises(FloatingPointError, match="imaginary residue"):
        monogenic_from_spectrum(spec, np.ones((8, 8)))


def test_orientation_conventions():
    from monolayer.spectral import MonogenicResponse

    z = np.zeros((1, 4))
    m = MonogenicResponse(z, np.array([[0.0, 0.0, 0.0, 1.0]]), np.array([[0.0, 1.0, -1.0, 1.0]]))
    np.testing.assert_allclose(local_orientation(m), [[0.0, -np.pi / 2, np.pi / 2, -np.pi / 4]])


def test_analytic_signal_of_cosine():
    n, k = 64, 5
    t = 2 * np.pi * k * np.arange(n) / n
    z = analytic_signal_1d(np.cos(t))
    np.testing.assert_allclose(z.real, np.cos(t), atol=1e-12)
    np.testing.assert_allclose(z.imag, np.sin(t), atol=1e-12)
    np.testing.assert_allclose(np.abs(z), 1.0, atol=1e-12)


def test_analytic_signal_odd_length():
    n, k = 63, 4
    t = 2 * np.pi * k * np.arange(n) / n
    z = analytic_signal_1d(3.0 * np.sin(t))
    np.testing.assert_allclose(np.abs(z), 3.0, atol=1e-12)


def test_analytic_signal_too_short():
    with pytest.raises(ValueError):
        analytic_signal_1d([1.0, 2.0])


@settings(max_examples=40, deadline=None)
@given(
    img=arrays(np.float64, (12, 12), elements=st.floats(0, 1)),
    a=st.floats(0.05, 20.0),
    b=st.floats(-5.0, 5.0),
)
def test_phase_and_orientation_are_affine_invariant(img, a, b):
    if np.ptp(img) < 1e-3:
        return
    ref = monogenic_transform(img, OFF_INIT)
    mod = monogenic_transform(a * img + b, OFF_INIT)
    # pixels where the response is essentially zero have undefined angles
    ok = ref.riesz_magnitude > 1e-8 * max(1.0, ref.riesz_magnitude.max())
    np.testing.assert_allclose(local_phase(mod)[ok], local_phase(ref)[ok], atol=1e-7)
    # orientation lives on a half circle: +pi/2 and -pi/2 are the same line
    d = local_orientation(mod) - local_orientation(ref)
    wrapped = (d + np.pi / 2) % np.pi - np.pi / 2
    assert np.max(np.abs(wrapped[ok])) < 1e-7
    np.testing.assert_allclose(local_amplitude(mod), a * local_amplitude(ref), rtol=1e-9, atol=1e-12)
