"""Rank correlation, rating standardisation and dependent-correlation tests."""
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import norm, rankdata, t as student_t

from ..utils.console import warn
from .errors import ManifestError, ParameterError

SIGNIFICANCE_LEVEL = 0.05
SMALL_SAMPLE = 30


def _vector(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.size < 1:
        raise ParameterError(f"{name} must not be empty")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite values")
    return arr


def _pair(x, y) -> Tuple[np.ndarray, np.ndarray]:
    x, y = _vector(x, "x"), _vector(y, "y")
    if x.size != y.size:
        raise ParameterError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ParameterError("rank correlation needs at least 2 samples")
    return x, y


def ranks(x) -> np.ndarray:
    """Rank 1 for the smallest value; ties share the average of their ranks"""
    return rankdata(_vector(x, "x"), method="average")


def has_ties(x) -> bool:
    x = _vector(x, "x")
    return np.unique(x).size != x.size


def srcc(x, y) -> float:
    """Spearman: closed form 1 - 6 sum d^2 / (n (n^2 - 1)) without ties,
    Pearson correlation of average ranks otherwise"""
    x, y = _pair(x, y)
    rx, ry = ranks(x), ranks(y)
    if np.all(rx == rx[0]) or np.all(ry == ry[0]):
        raise ParameterError("rank correlation undefined: zero rank variance")
    n = x.size
    if not (has_ties(x) or has_ties(y)):
        d = rx - ry
        sum_d2 = float(np.sum(d * d))
        return 1 - 6 * sum_d2 / (n * (n * n - 1))
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    r = float(np.sum(rx * ry) / math.sqrt(np.sum(rx * rx) * np.sum(ry * ry)))
    return max(-1.0, min(1.0, r))


def krcc(x, y) -> float:
    """Kendall tau-a: 2 sum_{i<j} sign(dx) sign(dy) / (n (n - 1)); tied pairs count 0"""
    x, y = _pair(x, y)
    n = x.size
    numerator = 0
    for i in range(n - 1):
        sx = np.sign(x[i + 1:] - x[i]).astype(np.int64)
        sy = np.sign(y[i + 1:] - y[i]).astype(np.int64)
        numerator += int(np.dot(sx, sy))
    return 2 * numerator / (n * (n - 1))


def fisher_z(r: float) -> float:
    if not -1.0 < r < 1.0:
        raise ParameterError(f"Fisher z needs |r| < 1, got {r}")
    return math.atanh(r)


def _check_correlations(n: int, *rs: float):
    if n < 4:
        raise ParameterError(f"dependent-correlation test needs n >= 4, got {n}")
    for r in rs:
        if not -1.0 < r < 1.0:
            raise ParameterError(f"correlations must lie strictly inside (-1, 1), got {r}")


def steiger_test(r_jk: float, r_jh: float, r_kh: float, n: int) -> Tuple[float, float]:
    """Steiger's Z for H0: rho_jk = rho_jh when variables k and h overlap via j.

    Fisher-transformed difference scaled by the covariance of the two
    estimates under H0 (pooled r_bar); two-sided p from the standard normal.
    """
    _check_correlations(n, r_jk, r_jh, r_kh)
    if r_jk == r_jh:
        return 0.0, 1.0
    r_bar = (r_jk + r_jh) / 2.0
    r_bar2 = r_bar * r_bar
    psi = r_kh * (1.0 - 2.0 * r_bar2) - 0.5 * r_bar2 * (1.0 - 2.0 * r_bar2 - r_kh * r_kh)
    covariance = psi / ((1.0 - r_bar2) ** 2)
    z = (fisher_z(r_jk) - fisher_z(r_jh)) * math.sqrt(n - 3) / math.sqrt(2.0 - 2.0 * covariance)
    p = float(2.0 * norm.sf(abs(z)))
    return z, min(p, 1.0)


def williams_test(r_jk: float, r_jh: float, r_kh: float, n: int) -> Tuple[float, float]:
    """Hotelling-Williams T2 with n - 3 degrees of freedom (the overlap case of R's paired.r)"""
    _check_correlations(n, r_jk, r_jh, r_kh)
    if r_jk == r_jh:
        return 0.0, 1.0
    determinant = 1.0 - r_jk ** 2 - r_jh ** 2 - r_kh ** 2 + 2.0 * r_jk * r_jh * r_kh
    average = (r_jk + r_jh) / 2.0
    cube = (1.0 - r_kh) ** 3
    t2 = (r_jk - r_jh) * math.sqrt(
        (n - 1) * (1.0 + r_kh) / (2.0 * (n - 1) / (n - 3) * determinant + average * average * cube)
    )
    p = float(2.0 * student_t.sf(abs(t2), n - 3))
    return t2, min(p, 1.0)


SIGNIFICANCE_TESTS = {
    "steiger": steiger_test,
    "williams": williams_test,
}


@dataclass(frozen=True)
class SignificanceEntry:
    statistic: str
    method: str
    reference: str
    z: float
    p: float
    direction: str
    caveat: Optional[str] = None

    @property
    def significant(self) -> bool:
        return self.p < SIGNIFICANCE_LEVEL


@dataclass
class CorrelationReport:
    measure: str
    srcc: float
    krcc: float
    n: int
    srcc_closed_form: bool = True
    significance: List[SignificanceEntry] = field(default_factory=list)

    @property
    def abs_srcc(self) -> float:
        return abs(self.srcc)

    @property
    def abs_krcc(self) -> float:
        return abs(self.krcc)


def correlation_report(measure: str, scores, truth) -> CorrelationReport:
    scores, truth = _pair(scores, truth)
    return CorrelationReport(
        measure=measure,
        srcc=srcc(scores, truth),
        krcc=krcc(scores, truth),
        n=int(scores.size),
        srcc_closed_form=not (has_ties(scores) or has_ties(truth)),
    )


@dataclass(frozen=True, eq=False)
class RatingMatrix:
    """n images x m graders; missing ratings are NaN"""
    images: Tuple[str, ...]
    graders: Tuple[str, ...]
    ratings: np.ndarray

    def __post_init__(self):
        array = np.array(self.ratings, dtype=np.float64)
        if array.shape != (len(self.images), len(self.graders)):
            raise ParameterError(
                f"ratings shape {array.shape} != ({len(self.images)} images, {len(self.graders)} graders)"
            )
        if len(self.images) < 2:
            raise ParameterError("rating matrix needs at least 2 images")
        if len(self.graders) < 1:
            raise ParameterError("rating matrix needs at least 1 grader")
        if len(set(self.images)) != len(self.images) or len(set(self.graders)) != len(self.graders):
            raise ParameterError("image and grader identifiers must be unique")
        array.setflags(write=False)
        object.__setattr__(self, "images", tuple(self.images))
        object.__setattr__(self, "graders", tuple(self.graders))
        object.__setattr__(self, "ratings", array)

    @classmethod
    def from_records(cls, records: Iterable[Tuple[str, str, float]]) -> "RatingMatrix":
        images: Dict[str, int] = {}
        graders: Dict[str, int] = {}
        cells = []
        for image_id, grader_id, value in records:
            i = images.setdefault(image_id, len(images))
            g = graders.setdefault(grader_id, len(graders))
            cells.append((i, g, float(value)))
        ratings = np.full((len(images), len(graders)), np.nan)
        for i, g, value in cells:
            if not np.isnan(ratings[i, g]):
                raise ParameterError(
                    f"duplicate rating for image '{list(images)[i]}' by grader '{list(graders)[g]}'"
                )
            ratings[i, g] = value
        return cls(tuple(images), tuple(graders), ratings)

    @classmethod
    def from_scores(cls, scores: Mapping[str, float], grader: str = "g1") -> "RatingMatrix":
        return cls.from_records((image_id, grader, value) for image_id, value in scores.items())

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "RatingMatrix":
        path = Path(path)
        if not path.exists():
            raise ManifestError(f"ratings file not found: {path}")
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.DictReader(row for row in f if not row.startswith("#"))
            expected = {"image_id", "grader_id", "rating"}
            if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
                raise ManifestError(f"{path}: header must be image_id,grader_id,rating")
            try:
                records = [(row["image_id"], row["grader_id"], float(row["rating"])) for row in reader]
            except (TypeError, ValueError) as e:
                raise ManifestError(f"{path}: bad rating value ({e})")
        return cls.from_records(records)

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["image_id", "grader_id", "rating"])
            for i, image_id in enumerate(self.images):
                for g, grader_id in enumerate(self.graders):
                    if not np.isnan(self.ratings[i, g]):
                        writer.writerow([image_id, grader_id, repr(float(self.ratings[i, g]))])
        return path

    def subset(self, image_ids: Sequence[str]) -> "RatingMatrix":
        index = {image_id: i for i, image_id in enumerate(self.images)}
        missing = [i for i in image_ids if i not in index]
        if missing:
            raise ParameterError(f"images without ratings: {', '.join(missing)}")
        rows = [index[i] for i in image_ids]
        return RatingMatrix(tuple(image_ids), self.graders, self.ratings[rows])


def zscore_ratings(r: RatingMatrix) -> np.ndarray:
    """Per-grader standardisation (sample sd), then per-image mean; aligned with r.images"""
    standardized = np.full(r.ratings.shape, np.nan)
    kept = 0
    for g, grader in enumerate(r.graders):
        column = r.ratings[:, g]
        present = ~np.isnan(column)
        values = column[present]
        if values.size < 2 or np.all(values == values[0]):
            warn(f"grader '{grader}' has zero rating variance; excluded from z-scores")
            continue
        sd = float(np.std(values, ddof=1))
        standardized[present, g] = (values - values.mean()) / sd
        kept += 1
    if kept == 0:
        raise ParameterError("no grader with rating variance; z-scores undefined")

    counts = np.sum(~np.isnan(standardized), axis=1)
    sums = np.nansum(standardized, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return means


def zscore_lookup(r: RatingMatrix) -> Dict[str, float]:
    return dict(zip(r.images, zscore_ratings(r).tolist()))
