"""Synthetic reference images and degradations for fixtures and benchmarks.

All operations take and return byte-range GrayImages clipped to [0, 255].
"""
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from PIL import Image
from scipy.ndimage import gaussian_filter

from ..iqa.errors import ParameterError, RangeError
from ..iqa.imgio import CropRect, DynamicRange, GrayImage, save_image
from ..iqa.stats import RatingMatrix
from .dataset import ManifestEntry, write_manifest

DEFAULT_SIGMAS = (2.0, 5.0, 10.0, 20.0, 40.0)
NOISE_SEED_OFFSET = 1000


def _byte(img: GrayImage) -> np.ndarray:
    if img.range is not DynamicRange.BYTE:
        raise RangeError("degradations operate on byte-range images")
    return img.data


def _result(data: np.ndarray) -> GrayImage:
    return GrayImage(np.clip(data, 0.0, 255.0), DynamicRange.BYTE)


def structured_image(size: int = 256, seed: int = 0) -> GrayImage:
    """Integer-valued test pattern: gradient, discs, bars and smoothed texture"""
    if size < 8:
        raise ParameterError(f"size must be >= 8, got {size}")
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:size, 0:size].astype(np.float64) / size

    image = 60.0 + 100.0 * x
    for _ in range(4):
        cy, cx = rng.uniform(0.15, 0.85, size=2)
        radius = rng.uniform(0.05, 0.18)
        inside = (y - cy) ** 2 + (x - cx) ** 2 < radius ** 2
        image[inside] += rng.uniform(-50.0, 60.0)
    bars = (np.floor(y * 16) % 2 == 0) & (x > 0.7)
    image[bars] -= 35.0
    image += 12.0 * np.sin(2 * np.pi * 9 * x) * np.cos(2 * np.pi * 7 * y)
    image += 20.0 * gaussian_filter(rng.standard_normal((size, size)), sigma=1.5)
    return GrayImage(np.round(np.clip(image, 16.0, 239.0)), DynamicRange.BYTE)


def unit_noise(shape, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).standard_normal(shape)


def add_gaussian_noise(img: GrayImage, sigma: float, seed: int = 0) -> GrayImage:
    """Same seed, same unit-noise field; sigma only scales it"""
    if sigma < 0:
        raise ParameterError(f"noise sigma must be >= 0, got {sigma}")
    data = _byte(img)
    return _result(data + sigma * unit_noise(data.shape, seed))


def gaussian_blur(img: GrayImage, sigma: float) -> GrayImage:
    if sigma <= 0:
        raise ParameterError(f"blur sigma must be positive, got {sigma}")
    return _result(gaussian_filter(_byte(img), sigma=sigma, mode="reflect"))


def adjust_contrast(img: GrayImage, factor: float) -> GrayImage:
    if factor < 0:
        raise ParameterError(f"contrast factor must be >= 0, got {factor}")
    data = _byte(img)
    mean = data.mean()
    return _result(mean + factor * (data - mean))


def adjust_brightness(img: GrayImage, offset: float) -> GrayImage:
    return _result(_byte(img) + offset)


def punch_hole(img: GrayImage, rect: CropRect, value: float = 0.0) -> GrayImage:
    if not rect.fits(img.width, img.height):
        raise ParameterError(f"hole {rect} does not fit a {img.width}x{img.height} image")
    data = _byte(img).copy()
    data[rect.y0:rect.y0 + rect.h, rect.x0:rect.x0 + rect.w] = value
    return _result(data)


def centered_hole(img: GrayImage, fraction: float, value: float = 0.0) -> GrayImage:
    """Square hole of side fraction * min(width, height) in the image centre"""
    if not 0.0 < fraction <= 1.0:
        raise ParameterError(f"hole fraction must lie in (0, 1], got {fraction}")
    side = max(1, int(round(fraction * min(img.width, img.height))))
    rect = CropRect((img.width - side) // 2, (img.height - side) // 2, side, side)
    return punch_hole(img, rect, value)


def jpeg_compress(img: GrayImage, quality: int) -> GrayImage:
    """8-bit baseline JPEG encode/decode round trip"""
    if not 1 <= quality <= 95:
        raise ParameterError(f"JPEG quality must lie in [1, 95], got {quality}")
    buffer = io.BytesIO()
    Image.fromarray(np.round(_byte(img)).astype(np.uint8)).save(buffer, format="JPEG", quality=int(quality))
    buffer.seek(0)
    with Image.open(buffer) as decoded:
        return _result(np.asarray(decoded.convert("L"), dtype=np.float64))


def noise_ladder(ref: GrayImage, sigmas: Sequence[float] = DEFAULT_SIGMAS, seed: int = 0) -> List[GrayImage]:
    return [add_gaussian_noise(ref, sigma, seed) for sigma in sigmas]


@dataclass(frozen=True)
class Degradation:
    """A degradation family; levels run from mildest to strongest"""
    name: str
    tag: str
    levels: Tuple[float, ...]
    apply: Callable[[GrayImage, float, int], GrayImage]


DEGRADATIONS: Dict[str, Degradation] = {
    "noise": Degradation("noise", "s", DEFAULT_SIGMAS, lambda img, level, seed: add_gaussian_noise(img, level, seed)),
    "blur": Degradation("blur", "b", (0.5, 1.0, 1.5, 2.5, 4.0), lambda img, level, seed: gaussian_blur(img, level)),
    "contrast": Degradation("contrast", "c", (0.85, 0.7, 0.55, 0.4, 0.25),
                            lambda img, level, seed: adjust_contrast(img, level)),
    "brightness": Degradation("brightness", "br", (8.0, 16.0, 32.0, 48.0, 64.0),
                              lambda img, level, seed: adjust_brightness(img, level)),
    "hole": Degradation("hole", "h", (0.1, 0.15, 0.2, 0.3, 0.4), lambda img, level, seed: centered_hole(img, level)),
    "jpeg": Degradation("jpeg", "q", (90.0, 70.0, 50.0, 30.0, 10.0),
                        lambda img, level, seed: jpeg_compress(img, int(level))),
}


def degradation(name: str) -> Degradation:
    try:
        return DEGRADATIONS[name.lower()]
    except KeyError:
        raise ParameterError(f"unknown degradation '{name}' (known: {', '.join(DEGRADATIONS)})")


def synthetic_image_id(index: int, level: float, kind: str = "noise") -> str:
    return f"img{index:03d}_{degradation(kind).tag}{level:g}"


def write_synthetic_dataset(root: Union[str, Path], name: str = "synthetic", n_images: int = 1,
                            size: int = 64, sigmas: Sequence[float] = DEFAULT_SIGMAS, seed: int = 0,
                            ratings: Optional[Mapping[str, float]] = None,
                            degradations: Sequence[str] = ("noise",)) -> Path:
    """Degraded-image dataset on disk: PNGs, manifest CSV, .meta sidecar and ratings CSV.

    `sigmas` are the noise levels; the other families use their registry
    levels. Distorted images are rounded to integers so they survive the
    8-bit PNG round trip unchanged. Ratings default to -sigma for a
    noise-only dataset and to minus the severity step (1 = mildest) otherwise,
    one grader either way.
    """
    if n_images < 1:
        raise ParameterError(f"n_images must be >= 1, got {n_images}")
    kinds = [degradation(d) for d in degradations]
    if not kinds:
        raise ParameterError("at least one degradation is required")
    if len({d.name for d in kinds}) != len(kinds):
        raise ParameterError(f"duplicate degradation in {', '.join(degradations)}")
    levels = {d.name: tuple(sigmas) if d.name == "noise" else d.levels for d in kinds}
    if "noise" in levels and not levels["noise"]:
        raise ParameterError("at least one noise level is required")
    total = n_images * sum(len(v) for v in levels.values())
    if total < 2:
        raise ParameterError(f"a rated dataset needs at least 2 distorted images, got {total}")
    noise_only = [d.name for d in kinds] == ["noise"]

    root = Path(root)
    images_dir = root / f"{name}_images"
    images_dir.mkdir(parents=True, exist_ok=True)

    entries = []
    default_ratings = {}
    for i in range(n_images):
        ref = structured_image(size, seed + i)
        ref_path = save_image(ref, images_dir / f"ref_{i:03d}.png")
        for d in kinds:
            prefix = "" if d.name == "noise" else f"{d.name}_"
            for k, level in enumerate(levels[d.name]):
                distorted = d.apply(ref, level, seed + NOISE_SEED_OFFSET + i)
                image_id = synthetic_image_id(i, level, d.name)
                rounded = GrayImage(np.round(distorted.data), DynamicRange.BYTE)
                dist_path = save_image(rounded, images_dir / f"dist_{i:03d}_{prefix}{k}.png")
                entries.append(ManifestEntry(image_id, ref_path, dist_path))
                default_ratings[image_id] = -float(level) if noise_only else -float(k + 1)

    ratings_name = f"{name}_ratings.csv"
    RatingMatrix.from_scores(ratings if ratings is not None else default_ratings).to_csv(root / ratings_name)
    return write_manifest(root / f"{name}.csv", entries, ratings=ratings_name)
