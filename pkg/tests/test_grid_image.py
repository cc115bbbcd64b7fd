import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from framelet_restore.grid_image import (
    PEAK,
    add_gaussian_noise,
    as_pixels,
    load_image,
    psnr,
    save_image,
)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def test_as_pixels_rejects_bad_shapes_and_values():
    with pytest.raises(ValueError):
        as_pixels(np.zeros(5))
    with pytest.raises(ValueError):
        as_pixels(np.zeros((3, 3, 3)))
    with pytest.raises(ValueError):
        as_pixels(np.zeros((0, 4)))
    with pytest.raises(ValueError):
        as_pixels([[0.0, np.nan], [1.0, 2.0]])
    with pytest.raises(ValueError):
        as_pixels(np.zeros((3, 4)), square=True)
    out = as_pixels([[1, 2], [3, 4]])
    assert out.dtype == np.float64 and out.shape == (2, 2)


def test_as_pixels_returns_a_copy():
    src = np.zeros((2, 2))
    out = as_pixels(src)
    out[0, 0] = 7.0
    assert src[0, 0] == 0.0


# ---------------------------------------------------------------------------
# File round trips
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("ascii_format", [False, True])
def test_pgm_roundtrip_8bit(tmp_path, ascii_format):
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, size=(13, 17)).astype(np.float64)
    path = tmp_path / "img.pgm"
    save_image(path, img, depth=8, ascii_format=ascii_format)
    assert np.array_equal(load_image(path), img)


def test_pgm_roundtrip_16bit(tmp_path):
    rng = np.random.default_rng(1)
    img = rng.integers(0, 65536, size=(9, 7)).astype(np.float64)
    path = tmp_path / "img.pgm"
    save_image(path, img, depth=16)
    assert np.array_equal(load_image(path), img)


def test_pgm_header_comments_and_whitespace(tmp_path):
    path = tmp_path / "img.pgm"
    path.write_bytes(b"P2\n# a comment\n3  2 # trailing\n255\n0 1 2\n3 4 5\n")
    assert np.array_equal(load_image(path), [[0, 1, 2], [3, 4, 5]])


def test_pgm_rejects_sample_above_maxval(tmp_path):
    path = tmp_path / "img.pgm"
    path.write_bytes(b"P2\n2 1\n100\n50 200\n")
    with pytest.raises(ValueError):
        load_image(path)


def test_pgm_rejects_truncated_payload(tmp_path):
    path = tmp_path / "img.pgm"
    path.write_bytes(b"P5\n4 4\n255\n" + bytes(7))
    with pytest.raises(ValueError):
        load_image(path)


@pytest.mark.parametrize("depth,hi", [(8, 256), (16, 65536)])
def test_png_roundtrip(tmp_path, depth, hi):
    rng = np.random.default_rng(depth)
    img = rng.integers(0, hi, size=(11, 11)).astype(np.float64)
    path = tmp_path / "img.png"
    save_image(path, img, depth=depth)
    assert np.array_equal(load_image(path), img)


def test_color_png_rejected(tmp_path):
    from PIL import Image as PILImage

    path = tmp_path / "rgb.png"
    PILImage.new("RGB", (4, 4), (10, 20, 30)).save(path)
    with pytest.raises(ValueError):
        load_image(path)


def test_save_clamps_and_rounds(tmp_path):
    img = np.array([[-3.2, 260.7], [100.4, 99.6]])
    path = tmp_path / "img.pgm"
    save_image(path, img, depth=8)
    assert np.array_equal(load_image(path), [[0.0, 255.0], [100.0, 100.0]])


def test_unknown_extension_rejected(tmp_path):
    with pytest.raises(ValueError):
        save_image(tmp_path / "img.tiff", np.zeros((2, 2)))
    (tmp_path / "img.tiff").write_bytes(b"")
    with pytest.raises(ValueError):
        load_image(tmp_path / "img.tiff")


def test_missing_file_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_image(tmp_path / "nope.pgm")


def test_bad_depth_rejected(tmp_path):
    with pytest.raises(ValueError):
        save_image(tmp_path / "img.pgm", np.zeros((2, 2)), depth=12)


# ---------------------------------------------------------------------------
# PSNR
# ---------------------------------------------------------------------------

def test_psnr_identical_is_inf():
    img = np.arange(16.0).reshape(4, 4)
    assert psnr(img, img) == float("inf")


def test_psnr_uniform_max_error_is_zero_db():
    ref = np.zeros((2, 2))
    tst = np.full((2, 2), PEAK)
    assert psnr(ref, tst) == 0.0


def test_psnr_single_pixel_error():
    # one of four pixels off by the full range: -20 log10(255 / (255*2))
    ref = np.zeros((2, 2))
    tst = np.zeros((2, 2))
    tst[0, 0] = 255.0
    expected = 20.0 * math.log10(2.0)
    assert abs(psnr(ref, tst) - expected) < 1e-12
    assert abs(expected - 6.020599913279624) < 1e-12


def test_psnr_shape_mismatch():
    with pytest.raises(ValueError):
        psnr(np.zeros((2, 2)), np.zeros((3, 3)))


def test_psnr_does_not_clamp():
    ref = np.full((2, 2), 255.0)
    wild = np.full((2, 2), 355.0)   # 100 over range
    mild = np.full((2, 2), 155.0)   # 100 inside range
    assert abs(psnr(ref, wild) - psnr(ref, mild)) < 1e-12


@given(hnp.arrays(np.float64, (4, 4), elements=st.floats(0, 255)),
       hnp.arrays(np.float64, (4, 4), elements=st.floats(0, 255)))
def test_psnr_symmetry(a, b):
    assert psnr(a, b) == psnr(b, a)


def test_psnr_strictly_decreases_with_error():
    ref = np.zeros((4, 4))
    tst = np.zeros((4, 4))
    tst[1, 2] = 10.0
    values = []
    for bump in (10.0, 20.0, 40.0):
        tst[1, 2] = bump
        values.append(psnr(ref, tst))
    assert values[0] > values[1] > values[2]


# ---------------------------------------------------------------------------
# Noise
# ---------------------------------------------------------------------------

def test_noise_statistics_and_determinism():
    base = np.zeros((256, 256))
    out = add_gaussian_noise(base, sigma=4.0, seed=11)
    assert 3.8 <= out.std() <= 4.2
    assert abs(out.mean()) <= 5.0 * 4.0 / 256.0
    again = add_gaussian_noise(base, sigma=4.0, seed=11)
    assert np.array_equal(out, again)
    other = add_gaussian_noise(base, sigma=4.0, seed=12)
    assert not np.array_equal(out, other)


def test_noise_zero_sigma_is_identity_and_negative_rejected():
    img = np.arange(9.0).reshape(3, 3)
    assert np.array_equal(add_gaussian_noise(img, 0.0, seed=0), img)
    with pytest.raises(ValueError):
        add_gaussian_noise(img, -1.0, seed=0)


def test_noise_does_not_mutate_input():
    img = np.zeros((8, 8))
    add_gaussian_noise(img, 3.0, seed=0)
    assert np.array_equal(img, np.zeros((8, 8)))
