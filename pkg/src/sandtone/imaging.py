"""8-bit raster primitives: image buffers, grayscale conversion, gray statistics."""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

log = logging.getLogger(__name__)

SUPPORTED_FORMATS = ("PNG", "JPEG")


class RgbImage:
    """Immutable row-major RGB raster with 8-bit channels."""

    __slots__ = ("_data",)

    def __init__(self, data) -> None:
        arr = np.asarray(data)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError("expected pixel data of shape (height, width, 3)")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("empty image")
        if arr.dtype != np.uint8:
            if not np.issubdtype(arr.dtype, np.integer):
                raise ValueError("channel values must be integers")
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("channel values must be in [0, 255]")
        arr = np.array(arr, dtype=np.uint8, copy=True)
        arr.setflags(write=False)
        self._data = arr

    @classmethod
    def full(cls, width: int, height: int, color: tuple[int, int, int]) -> "RgbImage":
        return cls(np.full((height, width, 3), color, dtype=np.uint8))

    @property
    def data(self) -> np.ndarray:
        """Read-only (height, width, 3) uint8 array."""
        return self._data

    @property
    def width(self) -> int:
        return self._data.shape[1]

    @property
    def height(self) -> int:
        return self._data.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, RgbImage):
            return NotImplemented
        return self._data.shape == other._data.shape and np.array_equal(self._data, other._data)

    def __repr__(self) -> str:
        return f"RgbImage({self.width}x{self.height})"


class GrayImage:
    """Immutable row-major 8-bit grayscale raster (0 darkest, 255 lightest)."""

    __slots__ = ("_data",)

    def __init__(self, data) -> None:
        arr = np.asarray(data)
        if arr.ndim != 2:
            raise ValueError("expected pixel data of shape (height, width)")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("empty image")
        if arr.dtype != np.uint8:
            if not np.issubdtype(arr.dtype, np.integer):
                raise ValueError("gray values must be integers")
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("gray values must be in [0, 255]")
        arr = np.array(arr, dtype=np.uint8, copy=True)
        arr.setflags(write=False)
        self._data = arr

    @classmethod
    def full(cls, width: int, height: int, value: int) -> "GrayImage":
        return cls(np.full((height, width), value, dtype=np.uint8))

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def width(self) -> int:
        return self._data.shape[1]

    @property
    def height(self) -> int:
        return self._data.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self._data.shape == other._data.shape and np.array_equal(self._data, other._data)

    def __repr__(self) -> str:
        return f"GrayImage({self.width}x{self.height})"


@dataclass(frozen=True)
class GrayStat:
    """Mean intensity of a grayscale raster, kept at fractional precision."""

    mean: float
    pixel_count: int

    def __post_init__(self) -> None:
        if self.pixel_count < 1:
            raise ValueError("empty image")
        if not 0.0 <= self.mean <= 255.0:
            raise ValueError("mean out of [0, 255]")


def to_grayscale(img: RgbImage) -> GrayImage:
    """Average-method conversion: each pixel becomes round_half_up((r+g+b)/3)."""
    sums = img.data.astype(np.uint16).sum(axis=2, dtype=np.uint16)
    # round_half_up(s/3) == (2s + 3) // 6 in integer arithmetic
    gray = (2 * sums.astype(np.uint32) + 3) // 6
    return GrayImage(gray.astype(np.uint8))


def mean_gray(img: GrayImage) -> GrayStat:
    """Exact arithmetic mean of all gray values, unrounded."""
    count = img.width * img.height
    total = int(img.data.sum(dtype=np.uint64))
    return GrayStat(mean=total / count, pixel_count=count)


def mean_gray_rgb(img: RgbImage) -> GrayStat:
    return mean_gray(to_grayscale(img))


def crop(img: RgbImage, left: int, top: int, width: int, height: int) -> RgbImage:
    """Rectangular crop; use when a sand photo has background contamination."""
    if width < 1 or height < 1:
        raise ValueError("crop must be at least 1x1")
    if left < 0 or top < 0 or left + width > img.width or top + height > img.height:
        raise ValueError("crop outside image bounds")
    return RgbImage(img.data[top : top + height, left : left + width])


def _from_pil(pil_img: Image.Image, origin: str) -> RgbImage:
    if pil_img.format is not None and pil_img.format not in SUPPORTED_FORMATS:
        raise ValueError(f"unsupported format {pil_img.format}: {origin}")
    if pil_img.mode in ("RGBA", "LA", "PA") or "transparency" in pil_img.info:
        log.warning("discarding alpha channel: %s", origin)
    if pil_img.mode != "RGB":
        pil_img = pil_img.convert("RGB")
    return RgbImage(np.asarray(pil_img))


def load_image(path: str | Path, crop_box: tuple[int, int, int, int] | None = None) -> RgbImage:
    """Decode a PNG or JPEG file. Alpha channels are discarded with a warning."""
    with Image.open(path) as pil_img:
        img = _from_pil(pil_img, str(path))
    if crop_box is not None:
        img = crop(img, *crop_box)
    return img


def decode_image(data: bytes, origin: str = "<bytes>") -> RgbImage:
    """Decode in-memory PNG or JPEG bytes (uploads)."""
    with Image.open(io.BytesIO(data)) as pil_img:
        return _from_pil(pil_img, origin)


def _to_pil(img: RgbImage | GrayImage) -> Image.Image:
    if isinstance(img, RgbImage):
        return Image.fromarray(img.data, mode="RGB")
    return Image.fromarray(img.data, mode="L")


def encode_png(img: RgbImage | GrayImage) -> bytes:
    buf = io.BytesIO()
    _to_pil(img).save(buf, format="PNG")
    return buf.getvalue()


def save_png(img: RgbImage | GrayImage, path: str | Path) -> None:
    Path(path).write_bytes(encode_png(img))
