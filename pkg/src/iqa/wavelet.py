import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Tuple

import numpy as np
from scipy.ndimage import convolve1d

from .errors import DimensionMismatchError, ParameterError
from .imgio import GrayImage

MAX_SCALE = 8


class FilterKind(Enum):
    LOWPASS = "lowpass"
    HIGHPASS = "highpass"


class Padding(Enum):
    SYMMETRIC = "symmetric"
    ZERO = "zero"

    @property
    def ndimage_mode(self) -> str:
        # reflect without repeating the edge sample: (d c b | a b c d)
        return "mirror" if self is Padding.SYMMETRIC else "constant"


@dataclass(frozen=True)
class Filter1D:
    coeffs: Tuple[float, ...]
    scale: int
    kind: FilterKind

    def __len__(self):
        return len(self.coeffs)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=np.float64)


@dataclass(frozen=True)
class Filter2D:
    """Separable kernel; the vertical factor runs along rows (axis 0)"""
    vertical: Filter1D
    horizontal: Filter1D
    orientation: int
    scale: int

    def dense(self) -> np.ndarray:
        return np.outer(self.vertical.as_array(), self.horizontal.as_array())

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.vertical), len(self.horizontal)


@dataclass(frozen=True, eq=False)
class ResponseMap:
    data: np.ndarray

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def base_filters() -> Tuple[Filter1D, Filter1D]:
    """(h_1, g_1) = (1/sqrt2)[1, 1], (1/sqrt2)[-1, 1]"""
    c = 1.0 / math.sqrt(2.0)
    return (Filter1D((c, c), 1, FilterKind.LOWPASS),
            Filter1D((-c, c), 1, FilterKind.HIGHPASS))


def upsample_dyadic(f: Filter1D) -> Filter1D:
    coeffs = []
    for c in f.coeffs:
        coeffs.extend((c, 0.0))
    return Filter1D(tuple(coeffs), f.scale, f.kind)


def haar_filter_1d(j: int, kind: FilterKind) -> Filter1D:
    """x_j = h_1 * up2(x_{j-1}), full convolution, trailing zeros trimmed"""
    if not 1 <= j <= MAX_SCALE:
        raise ParameterError(f"scale must be in [1, {MAX_SCALE}], got {j}")
    h1, g1 = base_filters()
    current = h1 if kind is FilterKind.LOWPASS else g1
    for scale in range(2, j + 1):
        full = np.convolve(h1.as_array(), upsample_dyadic(current).as_array())
        trimmed = np.trim_zeros(full, "b")
        current = Filter1D(tuple(float(c) for c in trimmed), scale, kind)
    return current


def haar_filter_2d(j: int, orientation: int) -> Filter2D:
    """Orientation 1 pairs (g_j vertical, h_j horizontal); orientation 2 the reverse"""
    low = haar_filter_1d(j, FilterKind.LOWPASS)
    high = haar_filter_1d(j, FilterKind.HIGHPASS)
    if orientation == 1:
        return Filter2D(high, low, 1, j)
    if orientation == 2:
        return Filter2D(low, high, 2, j)
    raise ParameterError(f"orientation must be 1 or 2, got {orientation}")


def _convolve_axis(data: np.ndarray, weights: np.ndarray, axis: int, padding: Padding) -> np.ndarray:
    # centred "same" output: y[i] = sum_k w[k] x[i + (L-1)//2 - k]
    length = len(weights)
    origin = (length - 1) // 2 - length // 2
    return convolve1d(data, weights, axis=axis, mode=padding.ndimage_mode, cval=0.0, origin=origin)


def convolve_array(data: np.ndarray, f: Filter2D, padding: Padding = Padding.SYMMETRIC) -> np.ndarray:
    rows, cols = f.shape
    if data.shape[0] < rows or data.shape[1] < cols:
        raise DimensionMismatchError(
            f"image {data.shape[1]}x{data.shape[0]} smaller than {cols}x{rows} kernel (scale {f.scale})"
        )
    vertical = _convolve_axis(data, f.vertical.as_array(), 0, padding)
    return _convolve_axis(vertical, f.horizontal.as_array(), 1, padding)


def convolve_same(img: GrayImage, f: Filter2D, padding: Padding = Padding.SYMMETRIC) -> ResponseMap:
    return ResponseMap(convolve_array(img.data, f, padding))


def subsample2(img: GrayImage) -> GrayImage:
    """2x2 block means; an odd trailing row/column is dropped"""
    if img.width < 2 or img.height < 2:
        raise DimensionMismatchError(f"cannot subsample a {img.width}x{img.height} image")
    h, w = img.height // 2 * 2, img.width // 2 * 2
    data = img.data[:h, :w]
    pooled = (data[0::2, 0::2] + data[0::2, 1::2] + data[1::2, 0::2] + data[1::2, 1::2]) / 4.0
    return GrayImage(pooled, img.range)


class HaarFilterBank:
    """Orientation x scale filters for HaarPSI, built once and shared"""

    def __init__(self, scales: int = 3):
        self.scales = scales
        self._filters: Dict[Tuple[int, int], Filter2D] = {
            (k, j): haar_filter_2d(j, k) for k in (1, 2) for j in range(1, scales + 1)
        }

    def filter(self, orientation: int, scale: int) -> Filter2D:
        return self._filters[(orientation, scale)]

    def responses(self, data: np.ndarray, padding: Padding = Padding.SYMMETRIC) -> np.ndarray:
        """Absolute responses, shape (2 orientations, scales, h, w)"""
        out = np.empty((2, self.scales) + data.shape, dtype=np.float64)
        for k in (1, 2):
            for j in range(1, self.scales + 1):
                out[k - 1, j - 1] = np.abs(convolve_array(data, self._filters[(k, j)], padding))
        return out


DEFAULT_BANK = HaarFilterBank()
