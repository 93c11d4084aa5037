"""Grayscale conversion and image IO against exact-arithmetic oracles."""

from __future__ import annotations

import io
import logging
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from sandtone.imaging import (
    GrayImage,
    RgbImage,
    crop,
    decode_image,
    encode_png,
    load_image,
    mean_gray,
    mean_gray_rgb,
    save_png,
    to_grayscale,
)


def round_half_up(value: Fraction) -> int:
    """Independent oracle: round to nearest, ties away from zero (values >= 0)."""
    floor = value.numerator // value.denominator
    if value - floor >= Fraction(1, 2):
        return floor + 1
    return floor


def test_channel_mean_rounds_half_up_for_every_sum():
    # all possible r+g+b sums
    for s in range(256 * 3 - 2):
        expected = round_half_up(Fraction(s, 3))
        arr = np.zeros((1, 1, 3), dtype=np.uint8)
        arr[0, 0] = [min(s, 255), min(max(s - 255, 0), 255), max(s - 510, 0)]
        if int(arr[0, 0].sum()) != s:
            continue
        assert int(to_grayscale(RgbImage(arr)).data[0, 0]) == expected


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_grayscale_matches_fraction_oracle_on_random_images(seed):
    rng = np.random.default_rng(seed)
    arr = rng.integers(0, 256, size=(5, 7, 3), dtype=np.uint8)
    gray = to_grayscale(RgbImage(arr)).data
    for y in range(5):
        for x in range(7):
            expected = round_half_up(Fraction(int(arr[y, x].astype(np.uint32).sum()), 3))
            assert int(gray[y, x]) == expected


def test_mean_gray_is_exact():
    arr = np.array([[0, 255], [1, 2]], dtype=np.uint8)
    stat = mean_gray(GrayImage(arr))
    assert stat.mean == (0 + 255 + 1 + 2) / 4
    assert stat.pixel_count == 4


def test_mean_gray_rgb_composes_conversion_and_mean():
    arr = np.full((3, 3, 3), 100, dtype=np.uint8)
    arr[0, 0] = [255, 255, 255]
    img = RgbImage(arr)
    grays = to_grayscale(img).data.astype(np.int64)
    assert mean_gray_rgb(img).mean == grays.sum() / grays.size


def test_images_reject_bad_shapes_and_values():
    with pytest.raises(ValueError, match="empty image"):
        RgbImage(np.zeros((0, 4, 3), dtype=np.uint8))
    with pytest.raises(ValueError, match="empty image"):
        GrayImage(np.zeros((4, 0), dtype=np.uint8))
    with pytest.raises(ValueError, match="shape"):
        RgbImage(np.zeros((4, 4), dtype=np.uint8))
    with pytest.raises(ValueError, match="shape"):
        GrayImage(np.zeros((4, 4, 3), dtype=np.uint8))
    with pytest.raises(ValueError):
        RgbImage(np.full((2, 2, 3), 300, dtype=np.int64))
    with pytest.raises(ValueError):
        RgbImage(np.full((2, 2, 3), 0.5))


def test_image_data_is_frozen_and_copied():
    src = np.zeros((2, 2, 3), dtype=np.uint8)
    img = RgbImage(src)
    src[0, 0, 0] = 9
    assert img.data[0, 0, 0] == 0
    with pytest.raises(ValueError):
        img.data[0, 0, 0] = 1


def test_crop_bounds_checking():
    img = RgbImage((np.arange(4 * 4 * 3) % 256).astype(np.uint8).reshape(4, 4, 3))
    sub = crop(img, 1, 2, 2, 2)
    assert sub.width == 2 and sub.height == 2
    assert np.array_equal(sub.data, img.data[2:4, 1:3])
    with pytest.raises(ValueError, match="crop outside image bounds"):
        crop(img, 3, 3, 2, 2)
    with pytest.raises(ValueError, match="at least 1x1"):
        crop(img, 0, 0, 0, 1)


def test_png_round_trip(tmp_path):
    arr = np.random.default_rng(1).integers(0, 256, (9, 6, 3), dtype=np.uint8)
    path = tmp_path / "img.png"
    save_png(RgbImage(arr), path)
    back = load_image(path)
    assert np.array_equal(back.data, arr)


def test_load_applies_crop_box(tmp_path):
    arr = np.random.default_rng(2).integers(0, 256, (8, 8, 3), dtype=np.uint8)
    path = tmp_path / "img.png"
    save_png(RgbImage(arr), path)
    sub = load_image(path, crop_box=(2, 1, 4, 5))
    assert np.array_equal(sub.data, arr[1:6, 2:6])


def test_jpeg_decodes(tmp_path):
    arr = np.full((16, 16, 3), 128, dtype=np.uint8)
    path = tmp_path / "img.jpg"
    Image.fromarray(arr).save(path, format="JPEG", quality=95)
    img = load_image(path)
    assert img.width == 16 and img.height == 16


def test_alpha_channel_is_discarded_with_warning(tmp_path, caplog):
    rgba = np.zeros((4, 4, 4), dtype=np.uint8)
    rgba[..., :3] = 77
    rgba[..., 3] = 10
    buf = io.BytesIO()
    Image.fromarray(rgba, mode="RGBA").save(buf, format="PNG")
    with caplog.at_level(logging.WARNING):
        img = decode_image(buf.getvalue(), "rgba.png")
    assert np.all(img.data == 77)
    assert any("alpha" in rec.message for rec in caplog.records)


def test_unsupported_format_is_rejected():
    buf = io.BytesIO()
    Image.fromarray(np.zeros((4, 4, 3), dtype=np.uint8)).save(buf, format="BMP")
    with pytest.raises(ValueError, match="unsupported format"):
        decode_image(buf.getvalue(), "img.bmp")


def test_decode_rejects_garbage():
    with pytest.raises((OSError, ValueError)):
        decode_image(b"not an image at all", "junk.bin")


def test_encode_png_is_deterministic():
    arr = np.random.default_rng(3).integers(0, 256, (12, 12, 3), dtype=np.uint8)
    img = RgbImage(arr)
    assert encode_png(img) == encode_png(img)
