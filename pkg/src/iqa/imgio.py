from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Union

import numpy as np
import png

from .errors import DimensionMismatchError, ImageFormatError, ParameterError, RangeError

RANGE_TOLERANCE = 1e-9

# rgb2gray luma weights, applied verbatim
GRAY_COEFFICIENTS = (0.2989, 0.5870, 0.1140)


class DynamicRange(Enum):
    UNIT = "unit"
    BYTE = "byte"

    @property
    def maximum(self) -> float:
        return 1.0 if self is DynamicRange.UNIT else 255.0


def _frozen_array(data, ndim: int) -> np.ndarray:
    array = np.array(data, dtype=np.float64)
    if array.ndim != ndim:
        raise DimensionMismatchError(f"expected a {ndim}-D array, got shape {array.shape}")
    if array.shape[0] < 1 or array.shape[1] < 1:
        raise DimensionMismatchError(f"image has a zero dimension: {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ParameterError("image contains non-finite samples")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class RgbImage:
    """Color raster of shape (height, width, 3), channels in [0, 1]"""
    data: np.ndarray

    def __post_init__(self):
        array = _frozen_array(self.data, 3)
        if array.shape[2] != 3:
            raise ImageFormatError(f"RGB image needs 3 channels, got {array.shape[2]}")
        if array.min() < -RANGE_TOLERANCE or array.max() > 1.0 + RANGE_TOLERANCE:
            raise RangeError("RGB channel values must lie in [0, 1]")
        object.__setattr__(self, "data", array)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Luminance raster of shape (height, width) with a declared dynamic range"""
    data: np.ndarray
    range: DynamicRange = DynamicRange.UNIT

    def __post_init__(self):
        array = _frozen_array(self.data, 2)
        top = self.range.maximum
        if array.min() < -RANGE_TOLERANCE or array.max() > top + RANGE_TOLERANCE:
            raise RangeError(
                f"values [{array.min():g}, {array.max():g}] outside declared {self.range.value} range [0, {top:g}]"
            )
        object.__setattr__(self, "data", array)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape

    def transpose(self) -> "GrayImage":
        return GrayImage(self.data.T, self.range)


@dataclass(frozen=True)
class CropRect:
    x0: int
    y0: int
    w: int
    h: int

    def __post_init__(self):
        if self.x0 < 0 or self.y0 < 0:
            raise ParameterError(f"crop offset must be non-negative, got ({self.x0}, {self.y0})")
        if self.w < 1 or self.h < 1:
            raise ParameterError(f"crop extent must be at least 1x1, got {self.w}x{self.h}")

    @classmethod
    def parse(cls, text: str) -> "CropRect":
        """Parse 'x,y,w,h'"""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise ParameterError(f"crop must be x,y,w,h, got '{text}'")
        try:
            x0, y0, w, h = (int(p) for p in parts)
        except ValueError:
            raise ParameterError(f"crop fields must be integers, got '{text}'")
        return cls(x0, y0, w, h)

    def fits(self, width: int, height: int) -> bool:
        return self.x0 + self.w <= width and self.y0 + self.h <= height

    def compose(self, inner: "CropRect") -> "CropRect":
        """Rect equivalent to cropping with self, then with inner"""
        if not inner.fits(self.w, self.h):
            raise DimensionMismatchError(f"inner rect {inner} exceeds outer extent {self.w}x{self.h}")
        return CropRect(self.x0 + inner.x0, self.y0 + inner.y0, inner.w, inner.h)


AnyImage = Union[RgbImage, GrayImage]


def _read_pnm(raw: bytes, path: Path) -> AnyImage:
    """Binary P5/P6 with maxval 255 or 65535"""
    magic = raw[:2]
    planes = 1 if magic == b"P5" else 3
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(raw):
            raise ImageFormatError(f"{path}: truncated PNM header")
        if raw[pos:pos + 1] == b"#":
            end = raw.find(b"\n", pos)
            pos = len(raw) if end < 0 else end + 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos])
    pos += 1  # single whitespace before raster

    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise ImageFormatError(f"{path}: malformed PNM header")
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: zero-dimension image {width}x{height}")
    if maxval == 255:
        dtype = np.dtype(np.uint8)
    elif maxval == 65535:
        dtype = np.dtype(">u2")
    else:
        raise ImageFormatError(f"{path}: unsupported PNM maxval {maxval} (expected 255 or 65535)")

    count = width * height * planes
    if len(raw) - pos < count * dtype.itemsize:
        raise ImageFormatError(f"{path}: truncated PNM raster")
    samples = np.frombuffer(raw, dtype=dtype, count=count, offset=pos).astype(np.float64) / maxval
    if planes == 1:
        return GrayImage(samples.reshape(height, width))
    return RgbImage(samples.reshape(height, width, 3))


def _read_png(path: Path) -> AnyImage:
    try:
        width, height, rows, info = png.Reader(filename=str(path)).asDirect()
        pixels = np.vstack([np.asarray(row, dtype=np.float64) for row in rows])
    except png.Error as e:
        raise ImageFormatError(f"{path}: {e}")
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: zero-dimension image {width}x{height}")
    if info.get("alpha"):
        raise ImageFormatError(f"{path}: alpha channels are not supported")

    maxval = float(2 ** info["bitdepth"] - 1)
    planes = info["planes"]
    samples = pixels / maxval
    if planes == 1:
        return GrayImage(samples.reshape(height, width))
    if planes == 3:
        return RgbImage(samples.reshape(height, width, 3))
    raise ImageFormatError(f"{path}: unsupported plane count {planes}")


def load_image(path: Union[str, Path]) -> AnyImage:
    """Decode PNG or binary PGM/PPM; samples map to [0, 1] as v / maxval"""
    path = Path(path)
    with open(path, "rb") as f:
        raw = f.read()
    if raw.startswith(b"\x89PNG"):
        return _read_png(path)
    if raw[:2] in (b"P5", b"P6"):
        return _read_pnm(raw, path)
    raise ImageFormatError(f"{path}: unsupported raster format (expected PNG or binary PGM/PPM)")


def save_image(img: AnyImage, path: Union[str, Path], bitdepth: Optional[int] = None) -> Path:
    """Write a PNG; 8-bit when every sample sits on the 8-bit grid, else 16-bit"""
    path = Path(path)
    if isinstance(img, RgbImage):
        scaled, greyscale = img.data, False
    else:
        scaled, greyscale = img.data / img.range.maximum, True
    scaled = np.clip(scaled, 0.0, 1.0)

    if bitdepth is None:
        on_grid = np.abs(scaled * 255.0 - np.round(scaled * 255.0)).max() <= RANGE_TOLERANCE
        bitdepth = 8 if on_grid else 16
    if bitdepth not in (8, 16):
        raise ParameterError(f"bitdepth must be 8 or 16, got {bitdepth}")

    quantized = np.round(scaled * (2 ** bitdepth - 1)).astype(np.uint16)
    rows = quantized.reshape(quantized.shape[0], -1).tolist()
    writer = png.Writer(width=quantized.shape[1], height=quantized.shape[0],
                        greyscale=greyscale, bitdepth=bitdepth)
    with open(path, "wb") as f:
        writer.write(f, rows)
    return path


def rgb_to_gray(img: RgbImage) -> GrayImage:
    r, g, b = GRAY_COEFFICIENTS
    data = img.data
    return GrayImage(r * data[..., 0] + g * data[..., 1] + b * data[..., 2], DynamicRange.UNIT)


def normalize_array(data: np.ndarray) -> np.ndarray:
    """Min-max scaling of any finite array to [0, 1]; constant input maps to zeros"""
    data = np.asarray(data, dtype=np.float64)
    low, high = data.min(), data.max()
    if high == low:
        return np.zeros_like(data)
    normalized = (data - low) / (high - low)
    # pin the endpoints against rounding
    normalized[data == low] = 0.0
    normalized[data == high] = 1.0
    return normalized


def mat2gray_normalize(img: GrayImage) -> GrayImage:
    """Min-max normalisation to [0, 1]; a constant image maps to all zeros"""
    return GrayImage(normalize_array(img.data), DynamicRange.UNIT)


def to_byte_range(img: GrayImage) -> GrayImage:
    if img.range is not DynamicRange.UNIT:
        raise RangeError("image is already in byte range")
    return GrayImage(img.data * 255.0, DynamicRange.BYTE)


def crop(img: GrayImage, rect: CropRect) -> GrayImage:
    if not rect.fits(img.width, img.height):
        raise DimensionMismatchError(
            f"crop {rect.x0},{rect.y0},{rect.w},{rect.h} exceeds image {img.width}x{img.height}"
        )
    return GrayImage(img.data[rect.y0:rect.y0 + rect.h, rect.x0:rect.x0 + rect.w], img.range)


def prepare_image(img: AnyImage, gray: bool = False, normalize: bool = False,
                  to_byte: bool = False, rect: Optional[CropRect] = None) -> GrayImage:
    """Fixed pipeline: gray -> normalize -> byte -> crop"""
    if isinstance(img, RgbImage):
        if not gray:
            raise ParameterError("RGB input requires grayscale conversion (chromatic measures are not supported)")
        img = rgb_to_gray(img)
    if normalize:
        img = mat2gray_normalize(img)
    if to_byte and img.range is DynamicRange.UNIT:
        img = to_byte_range(img)
    if rect is not None:
        img = crop(img, rect)
    return img
