import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from ..iqa import __version__
from ..iqa.errors import ManifestError, ParameterError
from ..iqa.imgio import CropRect, GrayImage, load_image, prepare_image
from ..iqa.measures import MeasureSpec
from ..iqa.stats import RatingMatrix

MANIFEST_HEADER = ["image_id", "reference", "distorted", "crop_x", "crop_y", "crop_w", "crop_h"]
CROP_FIELDS = MANIFEST_HEADER[3:]
TRUE_WORDS = {"true", "1", "yes", "on"}
FALSE_WORDS = {"false", "0", "no", "off"}


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    reference: Path
    distorted: Path
    crop: Optional[CropRect] = None


@dataclass
class DatasetManifest:
    name: str
    root: Path
    entries: List[ManifestEntry]
    ratings_path: Path
    grayscale: bool = False
    normalize: bool = False
    _ratings: Optional[RatingMatrix] = field(default=None, repr=False)

    @property
    def image_ids(self) -> List[str]:
        return [e.image_id for e in self.entries]

    @property
    def ratings(self) -> RatingMatrix:
        if self._ratings is None:
            self._ratings = RatingMatrix.from_csv(self.ratings_path)
        return self._ratings

    def load_pair(self, entry: ManifestEntry) -> Tuple[GrayImage, GrayImage]:
        """Decode both images and apply gray -> normalize -> byte -> crop"""
        return (self.prepare(load_image(entry.reference), entry),
                self.prepare(load_image(entry.distorted), entry))

    def prepare(self, img, entry: ManifestEntry) -> GrayImage:
        return prepare_image(img, gray=self.grayscale, normalize=self.normalize,
                             to_byte=True, rect=entry.crop)


def _parse_bool(value: str, key: str, path: Path) -> bool:
    word = value.strip().lower()
    if word in TRUE_WORDS:
        return True
    if word in FALSE_WORDS:
        return False
    raise ManifestError(f"{path}: '{key}' must be a boolean, got '{value}'")


def read_sidecar(path: Path) -> Dict[str, str]:
    if not path.exists():
        raise ManifestError(f"manifest sidecar not found: {path}")
    meta = {}
    with open(path, encoding="utf-8") as f:
        for number, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ManifestError(f"{path}:{number}: expected key=value, got '{line}'")
            key, value = line.split("=", 1)
            meta[key.strip()] = value.strip()
    return meta


def _parse_crop(row: Dict[str, str], path: Path, image_id: str) -> Optional[CropRect]:
    values = [(row.get(k) or "").strip() for k in CROP_FIELDS]
    if not any(values):
        return None
    if not all(values):
        raise ManifestError(f"{path}: entry '{image_id}' has a partial crop rect")
    try:
        return CropRect(*(int(v) for v in values))
    except (ValueError, ParameterError) as e:
        raise ManifestError(f"{path}: entry '{image_id}' has an invalid crop rect ({e})")


def load_manifest(path: Union[str, Path]) -> DatasetManifest:
    """Manifest CSV plus '<name>.meta' sidecar, validated and cross-checked with the ratings"""
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"manifest not found: {path}")
    root = path.parent
    name = path.stem

    meta = read_sidecar(path.with_suffix(".meta"))
    if "ratings" not in meta:
        raise ManifestError(f"{path.with_suffix('.meta')}: missing 'ratings=' entry")
    ratings_path = root / meta["ratings"]
    grayscale = _parse_bool(meta.get("grayscale", "false"), "grayscale", path)
    normalize = _parse_bool(meta.get("normalize", "false"), "normalize", path)

    entries: List[ManifestEntry] = []
    seen = set()
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(row for row in f if not row.startswith("#"))
        if reader.fieldnames is None or not set(MANIFEST_HEADER[:3]).issubset(reader.fieldnames):
            raise ManifestError(f"{path}: header must start with image_id,reference,distorted")
        for row in reader:
            image_id = (row["image_id"] or "").strip()
            if not image_id:
                raise ManifestError(f"{path}: entry without image_id")
            if image_id in seen:
                raise ManifestError(f"{path}: duplicate image_id '{image_id}'")
            seen.add(image_id)
            entry = ManifestEntry(
                image_id=image_id,
                reference=root / row["reference"].strip(),
                distorted=root / row["distorted"].strip(),
                crop=_parse_crop(row, path, image_id),
            )
            for image_path in (entry.reference, entry.distorted):
                if not image_path.exists():
                    raise ManifestError(f"{path}: entry '{image_id}' references missing file {image_path}")
            entries.append(entry)
    if not entries:
        raise ManifestError(f"{path}: manifest has no entries")

    manifest = DatasetManifest(name=name, root=root, entries=entries, ratings_path=ratings_path,
                               grayscale=grayscale, normalize=normalize)
    rated = set(manifest.ratings.images)
    unrated = [i for i in manifest.image_ids if i not in rated]
    if unrated:
        raise ManifestError(f"{path}: image_id(s) absent from ratings: {', '.join(unrated)}")
    return manifest


def write_manifest(path: Union[str, Path], entries: List[ManifestEntry], ratings: str,
                   grayscale: bool = False, normalize: bool = False) -> Path:
    """Write manifest CSV and sidecar; image paths are stored relative to the manifest"""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        for e in entries:
            crop = [e.crop.x0, e.crop.y0, e.crop.w, e.crop.h] if e.crop else ["", "", "", ""]
            writer.writerow([e.image_id, _relative(e.reference, path.parent),
                             _relative(e.distorted, path.parent)] + crop)
    with open(path.with_suffix(".meta"), "w", encoding="utf-8", newline="\n") as f:
        f.write(f"ratings={ratings}\n")
        f.write(f"grayscale={str(grayscale).lower()}\n")
        f.write(f"normalize={str(normalize).lower()}\n")
    return path


def _relative(target: Path, base: Path) -> str:
    try:
        return Path(target).relative_to(base).as_posix()
    except ValueError:
        return Path(target).as_posix()


def format_value(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.6f}"


@dataclass
class ScoreTable:
    measure: str
    description: str
    param_hash: str
    rows: List[Tuple[str, Optional[float]]]
    version: str = __version__
    notes: List[str] = field(default_factory=list)

    @classmethod
    def for_measure(cls, measure: MeasureSpec, rows) -> "ScoreTable":
        return cls(measure=measure.display_name, description=measure.describe(),
                   param_hash=measure.param_hash(), rows=list(rows))

    @property
    def present(self) -> List[Tuple[str, float]]:
        return [(i, s) for i, s in self.rows if s is not None]

    @property
    def skipped(self) -> List[str]:
        return [i for i, s in self.rows if s is None]

    def scores(self) -> Dict[str, float]:
        return dict(self.present)

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        with open(path, "w", newline="", encoding="utf-8") as f:
            f.write(f"# measure={self.measure}\n")
            f.write(f"# params={self.description}\n")
            f.write(f"# param_hash={self.param_hash}\n")
            f.write(f"# version={self.version}\n")
            for note in self.notes:
                f.write(f"# note={note}\n")
            if self.skipped:
                f.write(f"# skipped={';'.join(self.skipped)}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["image_id", "score"])
            for image_id, score in self.present:
                writer.writerow([image_id, format_value(score)])
        return path

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "ScoreTable":
        path = Path(path)
        if not path.exists():
            raise ManifestError(f"score table not found: {path}")
        meta: Dict[str, str] = {}
        notes: List[str] = []
        data_lines = []
        with open(path, newline="", encoding="utf-8") as f:
            for line in f:
                if line.startswith("#"):
                    key, _, value = line[1:].strip().partition("=")
                    if key == "note":
                        notes.append(value)
                    else:
                        meta[key] = value
                else:
                    data_lines.append(line)
        reader = csv.DictReader(data_lines)
        if reader.fieldnames is None or reader.fieldnames[:2] != ["image_id", "score"]:
            raise ManifestError(f"{path}: header must be image_id,score")
        try:
            rows = [(row["image_id"], float(row["score"])) for row in reader]
        except (TypeError, ValueError) as e:
            raise ManifestError(f"{path}: bad score value ({e})")
        skipped = [i for i in meta.get("skipped", "").split(";") if i]
        return cls(measure=meta.get("measure", "unknown"), description=meta.get("params", ""),
                   param_hash=meta.get("param_hash", ""), rows=rows + [(i, None) for i in skipped],
                   version=meta.get("version", __version__), notes=notes)
