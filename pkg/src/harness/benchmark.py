import time
from dataclasses import dataclass, field, replace
from typing import Dict, List

import psutil

from ..iqa.errors import ParameterError
from ..iqa.measures import MeasureSpec
from ..utils.run_journal import NULL_JOURNAL, RunJournal
from .config import HarnessConfig
from .dataset import DatasetManifest
from .metrics import TimingCollector
from .scoring import score_dataset


@dataclass
class TimingReport:
    """Best-of-repetitions wall clock for scoring a whole dataset.

    decode_seconds and score_seconds are summed over entries of the fastest
    run; with several threads they can exceed total_seconds. phases holds
    that run's per-phase sample summary.
    """
    measure: str
    images: int
    decode_seconds: float
    score_seconds: float
    total_seconds: float
    threads: int
    repetitions: int
    run_totals: List[float] = field(default_factory=list)
    phases: Dict[str, dict] = field(default_factory=dict)
    cpu_count: int = None
    process_cpu_seconds: float = None

    def summary_line(self) -> str:
        return (f"decode_seconds={self.decode_seconds:.6f} score_seconds={self.score_seconds:.6f} "
                f"total_seconds={self.total_seconds:.6f} threads={self.threads} reps={self.repetitions}")


def _process_cpu_seconds(process: psutil.Process) -> float:
    times = process.cpu_times()
    return times.user + times.system


def benchmark(manifest: DatasetManifest, measure: MeasureSpec, repetitions: int = 1,
              config: HarnessConfig = None, journal: RunJournal = None) -> TimingReport:
    if repetitions < 1:
        raise ParameterError(f"repetitions must be >= 1, got {repetitions}")
    config = replace(config or HarnessConfig(), skip_errors=False, verbose=False)
    journal = journal or NULL_JOURNAL
    process = psutil.Process()
    cpu_start = _process_cpu_seconds(process)

    runs = []
    for rep in range(repetitions):
        timings = TimingCollector()
        start = time.perf_counter()
        score_dataset(manifest, measure, config, timings=timings)
        total = time.perf_counter() - start
        runs.append((total, timings.total("decode"), timings.total("score"), timings.get_summary()))
        journal.log("bench", "RUN", total, detail=f"rep={rep + 1} images={timings.count('score')}")

    best_total, best_decode, best_score, best_phases = min(runs, key=lambda r: r[0])
    return TimingReport(
        measure=measure.display_name,
        images=len(manifest.entries),
        decode_seconds=best_decode,
        score_seconds=best_score,
        total_seconds=best_total,
        threads=config.threads,
        repetitions=repetitions,
        run_totals=[r[0] for r in runs],
        phases=best_phases,
        cpu_count=psutil.cpu_count(logical=True),
        process_cpu_seconds=_process_cpu_seconds(process) - cpu_start,
    )
