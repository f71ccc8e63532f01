"""(C, alpha) grid search over one or more rated datasets.

Filter-bank magnitudes are computed once per image; each C value then costs
one similarity pass per image and each alpha one pooling pass. The stages are
the functions haarpsi_score itself is built from, so every surface cell equals
a standalone evaluation at that (C, alpha).
"""
import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..iqa.errors import DimensionMismatchError, ManifestError, ParameterError
from ..iqa.haarpsi import HaarPsiParams, haar_magnitudes, mean_similarity, pool, weights
from ..iqa.stats import RatingMatrix, srcc
from ..utils.console import info
from ..utils.grid_builder import GridBuilder
from ..utils.progress import ProgressMonitor
from ..utils.run_journal import NULL_JOURNAL, RunJournal
from .config import HarnessConfig, PrecisionMode
from .dataset import DatasetManifest
from .scoring import aligned_truth

MEAN_COLUMN = "mean"


@dataclass(frozen=True, eq=False)
class SurfaceGrid:
    """SRCC per (dataset, C, alpha); the last block of `srcc` is the dataset mean"""
    c_values: Tuple[float, ...]
    alpha_values: Tuple[float, ...]
    dataset_names: Tuple[str, ...]
    srcc: np.ndarray
    precision_mode: PrecisionMode = PrecisionMode.REPORT
    report_digits: int = 4

    def __post_init__(self):
        array = np.array(self.srcc, dtype=np.float64)
        expected = (len(self.dataset_names) + 1, len(self.c_values), len(self.alpha_values))
        if array.shape != expected:
            raise ParameterError(f"surface shape {array.shape} != {expected}")
        if not np.all(np.isfinite(array)) or np.any(np.abs(array) > 1.0):
            raise ParameterError("surface values must be finite SRCC values in [-1, 1]")
        array.setflags(write=False)
        object.__setattr__(self, "c_values", tuple(float(c) for c in self.c_values))
        object.__setattr__(self, "alpha_values", tuple(float(a) for a in self.alpha_values))
        object.__setattr__(self, "dataset_names", tuple(self.dataset_names))
        object.__setattr__(self, "srcc", array)

    @property
    def mean(self) -> np.ndarray:
        return self.srcc[-1]

    @property
    def argmax_index(self) -> Tuple[int, int]:
        values = self.mean
        if self.precision_mode is PrecisionMode.SELECT:
            values = np.round(values, self.report_digits)
        # first maximum in C-major order: smallest C, then smallest alpha
        flat = int(np.argmax(values))
        return divmod(flat, len(self.alpha_values))

    @property
    def argmax(self) -> Tuple[float, float]:
        i, j = self.argmax_index
        return self.c_values[i], self.alpha_values[j]

    @property
    def best_mean(self) -> float:
        i, j = self.argmax_index
        return float(self.mean[i, j])

    @property
    def cell_count(self) -> int:
        return len(self.c_values) * len(self.alpha_values)

    def _index(self, values: Tuple[float, ...], value: float, name: str) -> int:
        for i, v in enumerate(values):
            if np.isclose(v, value, rtol=0.0, atol=1e-9):
                return i
        raise ParameterError(f"{name}={value:g} is not on the grid")

    def cell(self, C: float, alpha: float, dataset: str = None) -> float:
        i = self._index(self.c_values, C, "C")
        j = self._index(self.alpha_values, alpha, "alpha")
        if dataset is None:
            return float(self.mean[i, j])
        try:
            d = self.dataset_names.index(dataset)
        except ValueError:
            raise ParameterError(f"unknown dataset '{dataset}' (known: {', '.join(self.dataset_names)})")
        return float(self.srcc[d, i, j])

    def reported(self, value: float) -> float:
        """SRCC as printed: rounded to report_digits in both precision modes"""
        return round(float(value), self.report_digits)

    def footer(self) -> str:
        C, alpha = self.argmax
        return (f"argmax C={GridBuilder.format_value(C)} alpha={GridBuilder.format_value(alpha)} "
                f"mean_srcc={self.reported(self.best_mean):.6f}")

    def export_surface(self, path: Union[str, Path]) -> Path:
        return export_surface(self, path)

    @classmethod
    def import_surface(cls, path: Union[str, Path]) -> "SurfaceGrid":
        return import_surface(path)


@dataclass(eq=False)
class _PreparedDataset:
    name: str
    image_ids: List[str]
    magnitudes: List[Tuple[np.ndarray, np.ndarray]]
    weights: List[np.ndarray]
    truth: np.ndarray


def _unique_names(names: Sequence[str]) -> List[str]:
    seen = {}
    result = []
    for name in names:
        count = seen.get(name, 0) + 1
        seen[name] = count
        result.append(name if count == 1 else f"{name}_{count}")
    return result


def _prepare(manifest: DatasetManifest, ratings: Optional[RatingMatrix], name: str,
             params: HaarPsiParams) -> _PreparedDataset:
    magnitudes, cached_weights = [], []
    for entry in manifest.entries:
        f1, f2 = manifest.load_pair(entry)
        if f1.shape != f2.shape:
            raise DimensionMismatchError(
                f"{name}: entry '{entry.image_id}' dimensions differ: "
                f"{f1.width}x{f1.height} vs {f2.width}x{f2.height}"
            )
        m1, m2 = haar_magnitudes(f1, params), haar_magnitudes(f2, params)
        magnitudes.append((m1, m2))
        cached_weights.append(weights(m1, m2))
    ratings = ratings if ratings is not None else manifest.ratings
    image_ids = manifest.image_ids
    return _PreparedDataset(name, image_ids, magnitudes, cached_weights, aligned_truth(image_ids, ratings))


def _dataset_row(data: _PreparedDataset, C: float, alpha_values: Sequence[float]) -> np.ndarray:
    similarities = [mean_similarity(m1, m2, C) for m1, m2 in data.magnitudes]
    row = np.empty(len(alpha_values))
    for j, alpha in enumerate(alpha_values):
        scores = np.array([pool(s, w, alpha)[0] for s, w in zip(similarities, data.weights)])
        try:
            row[j] = srcc(scores, data.truth)
        except ParameterError as e:
            raise ParameterError(f"{data.name} at C={C:g} alpha={alpha:g}: {e}")
    return row


def grid_search(datasets: Sequence[Union[DatasetManifest, Tuple[DatasetManifest, Optional[RatingMatrix]]]],
                c_values: Sequence[float], alpha_values: Sequence[float],
                base_params: HaarPsiParams = HaarPsiParams(),
                precision_mode: PrecisionMode = PrecisionMode.REPORT, report_digits: int = 4,
                config: HarnessConfig = None, journal: RunJournal = None) -> SurfaceGrid:
    """SRCC surface of HaarPSI (subsample/padding from base_params) over the C x alpha grid"""
    if not datasets:
        raise ParameterError("grid search needs at least one dataset")
    c_values, alpha_values = list(c_values), list(alpha_values)
    GridBuilder.check_ascending(c_values, "C")
    GridBuilder.check_ascending(alpha_values, "alpha")
    # construct once so invalid C/alpha fail before any image is decoded
    for C in (c_values[0], c_values[-1]):
        for alpha in (alpha_values[0], alpha_values[-1]):
            base_params.with_values(C, alpha)
    config = config or HarnessConfig()
    journal = journal or NULL_JOURNAL

    pairs = [d if isinstance(d, tuple) else (d, None) for d in datasets]
    names = _unique_names([m.name for m, _ in pairs])
    start = time.time()
    journal.log("optimize", "START",
                detail=f"datasets={','.join(names)} cells={len(c_values) * len(alpha_values)}")

    prepared = [_prepare(m, r, name, base_params) for (m, r), name in zip(pairs, names)]
    journal.log("optimize", "PREPARED", time.time() - start)
    if config.verbose:
        info(f"cached filter responses for {sum(len(p.image_ids) for p in prepared)} images")

    monitor = ProgressMonitor("grid rows (C values)", len(c_values))

    def c_block(C: float) -> np.ndarray:
        block = np.stack([_dataset_row(p, C, alpha_values) for p in prepared])
        monitor.record()
        return block

    if config.verbose:
        monitor.start_monitoring()
    try:
        if config.threads == 1:
            blocks = [c_block(C) for C in c_values]
        else:
            with ThreadPoolExecutor(max_workers=config.threads) as executor:
                blocks = list(executor.map(c_block, c_values))
    except Exception as e:
        journal.log("optimize", "FAILED", time.time() - start, detail=str(e))
        raise
    finally:
        monitor.stop_monitoring()

    per_dataset = np.stack(blocks, axis=1)
    mean = per_dataset.sum(axis=0) / len(prepared)
    surface = SurfaceGrid(
        c_values=tuple(c_values),
        alpha_values=tuple(alpha_values),
        dataset_names=tuple(names),
        srcc=np.concatenate([per_dataset, mean[np.newaxis]], axis=0),
        precision_mode=precision_mode,
        report_digits=report_digits,
    )
    journal.log("optimize", "END", time.time() - start, detail=surface.footer())
    return surface


def export_surface(s: SurfaceGrid, path: Union[str, Path]) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["C", "alpha", *s.dataset_names, MEAN_COLUMN])
        for i, C in enumerate(s.c_values):
            for j, alpha in enumerate(s.alpha_values):
                cells = [f"{s.reported(s.srcc[d, i, j]):.6f}" for d in range(s.srcc.shape[0])]
                writer.writerow([f"{C:.6f}", f"{alpha:.6f}", *cells])
        f.write(f"# {s.footer()}\n")
        f.write(f"# precision_mode={s.precision_mode.value} digits={s.report_digits}\n")
    return path


def import_surface(path: Union[str, Path]) -> SurfaceGrid:
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"surface file not found: {path}")
    comments, rows = [], []
    with open(path, newline="", encoding="utf-8") as f:
        for line in f:
            if line.startswith("#"):
                comments.append(line[1:].strip())
            elif line.strip():
                rows.append(line)
    table = list(csv.reader(rows))
    if not table or table[0][:2] != ["C", "alpha"] or table[0][-1] != MEAN_COLUMN:
        raise ManifestError(f"{path}: header must be C,alpha,<datasets...>,{MEAN_COLUMN}")
    header, body = table[0], table[1:]
    names = header[2:-1]

    try:
        c_values = sorted({float(r[0]) for r in body})
        alpha_values = sorted({float(r[1]) for r in body})
        c_index = {c: i for i, c in enumerate(c_values)}
        alpha_index = {a: j for j, a in enumerate(alpha_values)}
        values = np.full((len(names) + 1, len(c_values), len(alpha_values)), np.nan)
        for r in body:
            if len(r) != len(header):
                raise ManifestError(f"{path}: row has {len(r)} fields, expected {len(header)}")
            values[:, c_index[float(r[0])], alpha_index[float(r[1])]] = [float(v) for v in r[2:]]
    except ValueError as e:
        raise ManifestError(f"{path}: bad surface value ({e})")
    if np.any(np.isnan(values)):
        raise ManifestError(f"{path}: surface is missing grid cells")

    mode, digits = PrecisionMode.REPORT, 4
    for comment in comments:
        if comment.startswith("precision_mode="):
            fields = dict(part.split("=", 1) for part in comment.split())
            mode = PrecisionMode(fields["precision_mode"])
            digits = int(fields.get("digits", digits))
    return SurfaceGrid(tuple(c_values), tuple(alpha_values), tuple(names), values, mode, digits)
