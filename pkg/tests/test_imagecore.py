import colorsys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image

from monolayer import kernels
from monolayer.imagecore import (
    ImageReadError,
    MalformedImageError,
    UnsupportedBitDepthError,
    as_image,
    hsv_to_rgb,
    load_image,
    normalize_minmax,
    quantize,
    save_image,
    to_grayscale_mean,
)


def test_normalize_range(rng):
    x = rng.normal(size=(5, 7)) * 3 + 2
    y = normalize_minmax(x)
    assert y.min() == 0.0 and y.max() == 1.0


def test_normalize_constant_is_zero():
    assert np.all(normalize_minmax(np.full((4, 4), 2.5)) == 0.0)


def test_normalize_per_axis(rng):
    x = rng.random((3, 6, 6))
    x[1] = 0.4
    y = normalize_minmax(x, axis=(-2, -1))
    for i in (0, 2):
        assert y[i].min() == 0.0 and y[i].max() == 1.0
    assert np.all(y[1] == 0.0)


def test_grayscale_mean():
    img = np.stack([np.full((2, 2), v) for v in (0.0, 0.3, 0.9)], axis=-1)
    np.testing.assert_allclose(to_grayscale_mean(img), 0.4)
    gray = np.ones((2, 2, 1))
    assert to_grayscale_mean(gray) is not None and to_grayscale_mean(gray).shape == (2, 2, 1)


@pytest.mark.parametrize("impl", [hsv_to_rgb, kernels.hsv_to_rgb_np, kernels.hsv_to_rgb_nb],
                         ids=["public", "numpy", "numba"])
def test_hsv_matches_colorsys(rng, impl):
    h, s, v = rng.random((3, 2000))
    got = impl(h, s, v)
    want = np.array([colorsys.hsv_to_rgb(*t) for t in zip(h, s, v)])
    np.testing.assert_allclose(got, want, atol=1e-14)


def test_hsv_primaries_and_periodicity():
    h = np.array([0.0, 1 / 3, 2 / 3, 1.0, -1 / 3])
    rgb = hsv_to_rgb(h, np.ones(5), np.ones(5))
    np.testing.assert_allclose(rgb, [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 0, 0], [0, 0, 1]], atol=1e-15)


def test_hsv_zero_saturation_is_gray():
    rgb = hsv_to_rgb(np.linspace(0, 1, 7), np.zeros(7), np.full(7, 0.25))
    assert np.all(rgb == 0.25)


def test_hsv_broadcast_shape(rng):
    h = rng.random((2, 3, 4))
    assert hsv_to_rgb(h, 1.0, 1.0).shape == (2, 3, 4, 3)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(0, 1), st.floats(0, 1))
def test_hsv_value_is_channel_max(h, s, v):
    rgb = hsv_to_rgb(h, s, v)
    assert rgb.max() == pytest.approx(v, abs=1e-12)
    assert rgb.min() == pytest.approx(v * (1 - s), abs=1e-12)


def test_as_image_validation():
    assert as_image(np.zeros((3, 4))).shape == (3, 4, 1)
    with pytest.raises(ValueError):
        as_image(np.zeros((3, 4, 2)))
    with pytest.raises(ValueError):
        as_image(np.full((2, 2), np.nan))


@pytest.mark.parametrize("suffix", [".png", ".ppm"])
@pytest.mark.parametrize("channels", [1, 3])
def test_8bit_round_trip(tmp_path, rng, suffix, channels):
    img = rng.random((9, 11, channels))
    path = tmp_path / f"x{suffix}"
    save_image(img, path)
    back = load_image(path)
    assert back.shape == img.shape
    np.testing.assert_array_equal(back, quantize(img) / 255.0)
    assert np.max(np.abs(back - img)) <= 0.5 / 255 + 1e-12


def test_raw_f64_is_lossless(tmp_path, rng):
    img = rng.normal(size=(5, 6, 3))
    save_image(img, tmp_path / "x.f64")
    np.testing.assert_array_equal(load_image(tmp_path / "x.f64"), img)
    save_image(img[..., :1], tmp_path / "y.bin", fmt="raw-f64")
    np.testing.assert_array_equal(load_image(tmp_path / "y.bin", fmt="raw-f64"), img[..., :1])


def test_load_errors(tmp_path):
    with pytest.raises(ImageReadError):
        load_image(tmp_path / "missing.png")
    (tmp_path / "junk.png").write_bytes(b"not an image at all")
    with pytest.raises(MalformedImageError):
        load_image(tmp_path / "junk.png")
    save_image(np.zeros((4, 4, 1)), tmp_path / "short.f64")
    data = (tmp_path / "short.f64").read_bytes()
    (tmp_path / "short.f64").write_bytes(data[:-8])
    with pytest.raises(MalformedImageError, match="expected"):
        load_image(tmp_path / "short.f64")
    (tmp_path / "tiny.f64").write_bytes(b"\x01\x00")
    with pytest.raises(MalformedImageError):
        load_image(tmp_path / "tiny.f64")
    with pytest.raises(ValueError):
        load_image(tmp_path / "x.tiff")


def test_sixteen_bit_rejected(tmp_path):
    Image.fromarray(np.full((4, 4), 1000, dtype=np.uint16)).save(tmp_path / "deep.png")
    with pytest.raises(UnsupportedBitDepthError):
        load_image(tmp_path / "deep.png")


def test_palette_and_alpha_converted(tmp_path):
    Image.new("RGBA", (3, 2), (255, 0, 0, 128)).save(tmp_path / "a.png")
    img = load_image(tmp_path / "a.png")
    assert img.shape == (2, 3, 3)
    np.testing.assert_array_equal(img[0, 0], [1.0, 0.0, 0.0])
