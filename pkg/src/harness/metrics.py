import time
from collections import defaultdict
from dataclasses import dataclass, field
from threading import Lock
from typing import Dict, List


@dataclass
class PhaseMetric:
    timestamp: float
    phase: str
    duration: float
    image_id: str = None
    success: bool = True


@dataclass
class TimingCollector:
    """Thread-safe per-phase wall-clock samples (seconds)"""
    _metrics: List[PhaseMetric] = field(default_factory=list)
    _lock: Lock = field(default_factory=Lock)

    def record(self, phase: str, duration: float, image_id: str = None, success: bool = True):
        with self._lock:
            self._metrics.append(PhaseMetric(
                timestamp=time.time(),
                phase=phase,
                duration=duration,
                image_id=image_id,
                success=success
            ))

    def total(self, phase: str) -> float:
        with self._lock:
            return sum(m.duration for m in self._metrics if m.phase == phase)

    def count(self, phase: str = None) -> int:
        with self._lock:
            return sum(1 for m in self._metrics if phase is None or m.phase == phase)

    def get_summary(self) -> Dict[str, dict]:
        with self._lock:
            by_phase = defaultdict(list)
            for m in self._metrics:
                by_phase[m.phase].append(m)

            results = {}
            for phase, metrics in by_phase.items():
                durations = sorted(m.duration for m in metrics)
                results[phase] = {
                    "total": len(metrics),
                    "errors": sum(1 for m in metrics if not m.success),
                    "sum_seconds": sum(durations),
                    "avg_seconds": sum(durations) / len(durations),
                    "min_seconds": durations[0],
                    "max_seconds": durations[-1],
                    "p90_seconds": durations[int(0.9 * len(durations))] if len(durations) > 1 else durations[0],
                }
            return results


class Stopwatch:
    """with Stopwatch(collector, 'decode', image_id): ..."""

    def __init__(self, collector: TimingCollector, phase: str, image_id: str = None):
        self.collector = collector
        self.phase = phase
        self.image_id = image_id
        self.elapsed = 0.0

    def __enter__(self):
        self._start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.elapsed = time.perf_counter() - self._start
        if self.collector is not None:
            self.collector.record(self.phase, self.elapsed, self.image_id, success=exc_type is None)
        return False
