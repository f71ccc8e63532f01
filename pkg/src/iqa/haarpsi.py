"""HaarPSI: Haar wavelet-based perceptual similarity with tunable (C, alpha).

The score is computed in three stages so that parameter sweeps can reuse the
expensive part:

    haar_magnitudes   preprocessing + |filter responses|   (depends on neither C nor alpha)
    mean_similarity   mean over scales 1, 2 of S(a, b, C)  (depends on C)
    pool              logistic, weighting, inverse logistic (depends on alpha)

haarpsi_score is exactly pool(mean_similarity(...)) on the magnitudes of both
images, so a sweep that caches magnitudes reproduces standalone scores bit for bit.
"""
import math
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np
from scipy.special import expit, logit

from .errors import DimensionMismatchError, ParameterError, RangeError
from .imgio import DynamicRange, GrayImage
from .wavelet import DEFAULT_BANK, Padding, ResponseMap, subsample2


@dataclass(frozen=True)
class HaarPsiParams:
    C: float = 30.0
    alpha: float = 4.2
    subsample: bool = True
    padding: Padding = Padding.SYMMETRIC

    def __post_init__(self):
        if not (math.isfinite(self.C) and self.C > 0):
            raise ParameterError(f"C must be a positive real, got {self.C}")
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ParameterError(f"alpha must be a positive real, got {self.alpha}")
        if not isinstance(self.padding, Padding):
            object.__setattr__(self, "padding", Padding(self.padding))

    def with_values(self, C: float, alpha: float) -> "HaarPsiParams":
        return replace(self, C=float(C), alpha=float(alpha))

    def describe(self) -> str:
        return (f"C={self.C:g} alpha={self.alpha:g} subsample={str(self.subsample).lower()} "
                f"padding={self.padding.value}")


# (C, alpha) per named setting; med and cxr share the jointly optimised values
PRESETS = {
    "default": (30.0, 4.2),
    "med": (5.0, 4.9),
    "cxr": (5.0, 4.9),
    "pa": (5.0, 6.3),
}


def available_presets() -> Tuple[str, ...]:
    return tuple(PRESETS)


def preset(name: str) -> HaarPsiParams:
    try:
        C, alpha = PRESETS[name.lower()]
    except KeyError:
        raise ParameterError(f"unknown preset '{name}' (known: {', '.join(PRESETS)})")
    return HaarPsiParams(C=C, alpha=alpha)


@dataclass(frozen=True, eq=False)
class HaarPsiResult:
    score: float
    hs_maps: Tuple[ResponseMap, ResponseMap]
    weight_maps: Tuple[ResponseMap, ResponseMap]


def similarity(a, b, C):
    """S(a, b, C) = (2ab + C) / (a^2 + b^2 + C), elementwise and symmetric in a, b"""
    return (2.0 * (a * b) + C) / (a * a + b * b + C)


def logistic(y, alpha):
    return expit(alpha * y)


def logistic_inverse(p, alpha):
    p_arr = np.asarray(p, dtype=np.float64)
    if np.any((p_arr <= 0.0) | (p_arr >= 1.0)):
        raise ParameterError("logistic_inverse needs p strictly inside (0, 1)")
    return logit(p) / alpha


def _check_pair(f1: GrayImage, f2: GrayImage):
    if f1.shape != f2.shape:
        raise DimensionMismatchError(
            f"image dimensions differ: {f1.width}x{f1.height} vs {f2.width}x{f2.height}"
        )
    for img in (f1, f2):
        if img.range is not DynamicRange.BYTE:
            raise RangeError("HaarPSI requires byte-range [0, 255] inputs")


def haar_magnitudes(img: GrayImage, params: HaarPsiParams) -> np.ndarray:
    """|g_j^(k) * f| for k = 1, 2 and j = 1..3, shape (2, 3, h, w)"""
    if params.subsample:
        img = subsample2(img)
    return DEFAULT_BANK.responses(img.data, params.padding)


def mean_similarity(m1: np.ndarray, m2: np.ndarray, C: float) -> np.ndarray:
    """Mean of S over scales 1 and 2 per orientation, shape (2, h, w)"""
    s = similarity(m1[:, :2], m2[:, :2], C)
    return (s[:, 0] + s[:, 1]) / 2.0


def weights(m1: np.ndarray, m2: np.ndarray) -> np.ndarray:
    return np.maximum(m1[:, 2], m2[:, 2])


def pool(mean_s: np.ndarray, w: np.ndarray, alpha: float) -> Tuple[float, np.ndarray]:
    """Weighted logistic pooling; returns (score, HS maps)"""
    hs = logistic(mean_s, alpha)
    total = w.sum()
    if total > 0.0:
        pooled = (hs * w).sum() / total
    else:
        # both inputs constant: nothing to weight
        pooled = hs.mean()
    score = float(logistic_inverse(pooled, alpha)) ** 2
    return min(score, 1.0), hs


def local_similarity_map(f1: GrayImage, f2: GrayImage, k: int, p: HaarPsiParams) -> ResponseMap:
    _check_pair(f1, f2)
    if k not in (1, 2):
        raise ParameterError(f"orientation must be 1 or 2, got {k}")
    mean_s = mean_similarity(haar_magnitudes(f1, p), haar_magnitudes(f2, p), p.C)
    return ResponseMap(logistic(mean_s[k - 1], p.alpha))


def weight_map(f1: GrayImage, f2: GrayImage, k: int, p: HaarPsiParams) -> ResponseMap:
    _check_pair(f1, f2)
    if k not in (1, 2):
        raise ParameterError(f"orientation must be 1 or 2, got {k}")
    return ResponseMap(weights(haar_magnitudes(f1, p), haar_magnitudes(f2, p))[k - 1])


def score_magnitudes(m1: np.ndarray, m2: np.ndarray, params: HaarPsiParams) -> float:
    score, _ = pool(mean_similarity(m1, m2, params.C), weights(m1, m2), params.alpha)
    return score


def haarpsi_score(f1: GrayImage, f2: GrayImage, p: HaarPsiParams = HaarPsiParams()) -> HaarPsiResult:
    _check_pair(f1, f2)
    if p.subsample and (f1.width < 2 or f1.height < 2):
        raise DimensionMismatchError("subsampling needs images of at least 2x2")
    m1, m2 = haar_magnitudes(f1, p), haar_magnitudes(f2, p)
    w = weights(m1, m2)
    score, hs = pool(mean_similarity(m1, m2, p.C), w, p.alpha)
    return HaarPsiResult(
        score=score,
        hs_maps=(ResponseMap(hs[0]), ResponseMap(hs[1])),
        weight_maps=(ResponseMap(w[0]), ResponseMap(w[1])),
    )
