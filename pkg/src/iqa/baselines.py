import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .errors import DimensionMismatchError, ParameterError
from .imgio import GrayImage


@dataclass(frozen=True)
class SsimConfig:
    window_size: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    peak: float = 255.0

    def __post_init__(self):
        if self.window_size < 3 or self.window_size % 2 == 0:
            raise ParameterError(f"window_size must be an odd integer >= 3, got {self.window_size}")
        if self.sigma <= 0 or self.k1 <= 0 or self.k2 <= 0 or self.peak <= 0:
            raise ParameterError("sigma, k1, k2 and peak must be positive")

    def window(self) -> np.ndarray:
        """Normalised 1-D Gaussian; the 2-D window is its outer product"""
        radius = self.window_size // 2
        x = np.arange(-radius, radius + 1, dtype=np.float64)
        g = np.exp(-(x * x) / (2.0 * self.sigma * self.sigma))
        return g / g.sum()


def _check_pair(f1: GrayImage, f2: GrayImage):
    if f1.shape != f2.shape:
        raise DimensionMismatchError(
            f"image dimensions differ: {f1.width}x{f1.height} vs {f2.width}x{f2.height}"
        )
    if f1.range is not f2.range:
        raise ParameterError("images must share a dynamic range")


def psnr(f1: GrayImage, f2: GrayImage, peak: float = 255.0) -> float:
    """10 log10(peak^2 / MSE) in dB; identical images give +inf"""
    _check_pair(f1, f2)
    if peak <= 0:
        raise ParameterError(f"peak must be positive, got {peak}")
    diff = f1.data - f2.data
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def _valid_filter(data: np.ndarray, g: np.ndarray) -> np.ndarray:
    # interior of a separable Gaussian pass; border samples never reach the valid region
    r = len(g) // 2
    out = correlate1d(correlate1d(data, g, axis=0, mode="constant"), g, axis=1, mode="constant")
    return out[r:data.shape[0] - r, r:data.shape[1] - r]


def ssim_map(f1: GrayImage, f2: GrayImage, cfg: SsimConfig = SsimConfig()) -> np.ndarray:
    _check_pair(f1, f2)
    if f1.height < cfg.window_size or f1.width < cfg.window_size:
        raise DimensionMismatchError(
            f"image {f1.width}x{f1.height} smaller than {cfg.window_size}x{cfg.window_size} SSIM window"
        )
    g = cfg.window()
    x, y = f1.data, f2.data
    c1 = (cfg.k1 * cfg.peak) ** 2
    c2 = (cfg.k2 * cfg.peak) ** 2

    mu_x = _valid_filter(x, g)
    mu_y = _valid_filter(y, g)
    var_x = _valid_filter(x * x, g) - mu_x * mu_x
    var_y = _valid_filter(y * y, g) - mu_y * mu_y
    cov = _valid_filter(x * y, g) - mu_x * mu_y

    numerator = (2.0 * (mu_x * mu_y) + c1) * (2.0 * cov + c2)
    denominator = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return numerator / denominator


def ssim(f1: GrayImage, f2: GrayImage, cfg: SsimConfig = SsimConfig()) -> float:
    return float(np.mean(ssim_map(f1, f2, cfg)))
