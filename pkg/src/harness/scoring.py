import time
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from ..iqa.errors import ParameterError
from ..iqa.measures import MeasureSpec
from ..iqa.stats import (
    SIGNIFICANCE_LEVEL,
    SIGNIFICANCE_TESTS,
    SMALL_SAMPLE,
    CorrelationReport,
    RatingMatrix,
    SignificanceEntry,
    correlation_report,
    krcc,
    srcc,
    zscore_lookup,
)
from ..utils.console import warn
from ..utils.progress import ProgressMonitor
from ..utils.run_journal import NULL_JOURNAL, RunJournal
from .config import HarnessConfig
from .dataset import DatasetManifest, ManifestEntry, ScoreTable
from .metrics import Stopwatch, TimingCollector

RANK_TEST_NOTE = "normal-theory test applied to rank correlations; p-values are approximate"

Scores = Union[ScoreTable, Mapping[str, float]]


def _with_context(error: Exception, image_id: str) -> Exception:
    try:
        wrapped = type(error)(f"entry '{image_id}': {error}")
    except Exception:
        return error
    wrapped.__cause__ = error
    return wrapped


class DatasetScorer:
    """Scores every manifest entry with one measure; rows come back in manifest order"""

    def __init__(self, manifest: DatasetManifest, measure: MeasureSpec,
                 config: HarnessConfig = None, journal: RunJournal = None,
                 timings: TimingCollector = None):
        self.manifest = manifest
        self.measure = measure
        self.config = config or HarnessConfig()
        self.journal = journal or NULL_JOURNAL
        self.timings = timings
        self.monitor = ProgressMonitor(f"scoring {manifest.name}", len(manifest.entries))

    def _score_entry(self, entry: ManifestEntry) -> Tuple[str, Optional[float], Optional[Exception]]:
        try:
            with Stopwatch(self.timings, "decode", entry.image_id):
                f1, f2 = self.manifest.load_pair(entry)
            with Stopwatch(self.timings, "score", entry.image_id):
                value = self.measure.compute(f1, f2)
        except Exception as e:
            self.monitor.record(success=False)
            self.journal.log("batch", "ENTRY_FAILED", detail=f"{entry.image_id}: {e}")
            return entry.image_id, None, e
        self.monitor.record(success=True)
        return entry.image_id, value, None

    def _run_entries(self) -> List[Tuple[str, Optional[float], Optional[Exception]]]:
        entries = self.manifest.entries
        if self.config.threads == 1:
            return [self._score_entry(e) for e in entries]
        with ThreadPoolExecutor(max_workers=self.config.threads) as executor:
            # map keeps input order regardless of completion order
            return list(executor.map(self._score_entry, entries))

    def run(self) -> ScoreTable:
        start = time.time()
        self.journal.log("batch", "START",
                         detail=f"{self.manifest.name} measure={self.measure.describe()} "
                                f"threads={self.config.threads}")
        if self.config.verbose:
            self.monitor.start_monitoring()
        try:
            results = self._run_entries()
        finally:
            self.monitor.stop_monitoring()

        failures = [(image_id, e) for image_id, _, e in results if e is not None]
        if failures and not self.config.skip_errors:
            image_id, error = failures[0]
            self.journal.log("batch", "END", time.time() - start, detail="aborted")
            raise _with_context(error, image_id)
        for image_id, error in failures:
            warn(f"skipped entry '{image_id}': {error}")
        if failures:
            warn(f"{len(failures)} of {len(results)} entries skipped")

        counts = self.monitor.snapshot()
        self.journal.log("batch", "END", time.time() - start,
                         detail=f"scored={counts['done']} skipped={counts['failed']}")
        return ScoreTable.for_measure(self.measure, [(image_id, value) for image_id, value, _ in results])


def score_dataset(manifest: DatasetManifest, measure: MeasureSpec, config: HarnessConfig = None,
                  journal: RunJournal = None, timings: TimingCollector = None) -> ScoreTable:
    return DatasetScorer(manifest, measure, config, journal, timings).run()


def _score_items(scores: Scores) -> List[Tuple[str, float]]:
    if isinstance(scores, ScoreTable):
        return scores.present
    return list(scores.items())


def aligned_truth(image_ids: List[str], ratings: RatingMatrix) -> np.ndarray:
    lookup = zscore_lookup(ratings)
    missing = [i for i in image_ids if i not in lookup]
    if missing:
        raise ParameterError(f"scores without ratings: {', '.join(missing)}")
    truth = np.array([lookup[i] for i in image_ids], dtype=np.float64)
    undefined = [i for i, z in zip(image_ids, truth) if np.isnan(z)]
    if undefined:
        raise ParameterError(f"no usable ratings (all graders excluded) for: {', '.join(undefined)}")
    return truth


def evaluate(scores: Scores, ratings: RatingMatrix, measure: str = None) -> CorrelationReport:
    """SRCC/KRCC of the scores against per-image mean z-scores.

    z-scores are standardised over every image in the rating matrix, then
    selected for the scored images.
    """
    items = _score_items(scores)
    if len(items) < 2:
        raise ParameterError(f"evaluation needs at least 2 scored images, got {len(items)}")
    image_ids = [i for i, _ in items]
    values = np.array([s for _, s in items], dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ParameterError("scores must be finite for rank correlation")
    if measure is None:
        measure = scores.measure if isinstance(scores, ScoreTable) else "scores"
    return correlation_report(measure, values, aligned_truth(image_ids, ratings))


def compare_measures(a: CorrelationReport, b: CorrelationReport, scores_a: Scores, scores_b: Scores,
                     ratings: RatingMatrix, method: str = "steiger") -> List[SignificanceEntry]:
    """Dependent-correlation test of measure a against measure b, once for SRCC and once for KRCC.

    Each measure is oriented so its correlation with the ratings is positive;
    direction says whether a is significantly better or worse than b.
    """
    if method not in SIGNIFICANCE_TESTS:
        raise ParameterError(f"unknown significance method '{method}' (known: {', '.join(SIGNIFICANCE_TESTS)})")
    test = SIGNIFICANCE_TESTS[method]

    map_a: Dict[str, float] = dict(_score_items(scores_a))
    map_b: Dict[str, float] = dict(_score_items(scores_b))
    if set(map_a) != set(map_b):
        only = sorted(set(map_a) ^ set(map_b))
        raise ParameterError(f"measures were scored on different images: {', '.join(only)}")
    image_ids = list(map_a)
    n = len(image_ids)
    if a.n != n or b.n != n:
        raise ParameterError(f"report sizes ({a.n}, {b.n}) do not match the score sets ({n})")

    truth = aligned_truth(image_ids, ratings)
    xa = np.array([map_a[i] for i in image_ids], dtype=np.float64)
    xb = np.array([map_b[i] for i in image_ids], dtype=np.float64)
    caveat = None
    if n < SMALL_SAMPLE:
        caveat = f"small sample (n={n} < {SMALL_SAMPLE}); {RANK_TEST_NOTE}"

    entries = []
    for statistic, correlate in (("srcc", srcc), ("krcc", krcc)):
        r_jk = correlate(truth, xa)
        r_jh = correlate(truth, xb)
        r_kh = correlate(xa, xb)
        sign_a = -1.0 if r_jk < 0 else 1.0
        sign_b = -1.0 if r_jh < 0 else 1.0
        if abs(r_kh) == 1.0:
            # same rank order up to sign, so the oriented correlations coincide
            z, p = 0.0, 1.0
        else:
            z, p = test(abs(r_jk), abs(r_jh), r_kh * sign_a * sign_b, n)
        direction = "none"
        if p < SIGNIFICANCE_LEVEL:
            direction = "better" if z > 0 else "worse"
        entries.append(SignificanceEntry(statistic=statistic, method=method, reference=b.measure,
                                         z=z, p=p, direction=direction, caveat=caveat))
    return entries
