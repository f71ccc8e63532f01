import sys
import time
import threading


class ProgressMonitor:
    """Thread-safe done/failed counters with an optional once-per-interval stderr ticker"""

    def __init__(self, label: str, total: int, interval: float = 1.0, stream=None):
        self.label = label
        self.total = total
        self.interval = interval
        self.stream = stream or sys.stderr
        self.start_time = time.time()
        self.done = 0
        self.failed = 0
        self.lock = threading.Lock()
        self.running = False
        self.monitor_thread = None

    def start_monitoring(self):
        self.start_time = time.time()
        self.running = True
        self.monitor_thread = threading.Thread(target=self._monitor_loop, daemon=True)
        self.monitor_thread.start()

    def stop_monitoring(self):
        self.running = False
        if self.monitor_thread:
            self.monitor_thread.join(timeout=self.interval + 1)
            self.monitor_thread = None

    def record(self, success: bool = True):
        with self.lock:
            if success:
                self.done += 1
            else:
                self.failed += 1

    def snapshot(self):
        with self.lock:
            return {"done": self.done, "failed": self.failed, "total": self.total}

    def format_line(self) -> str:
        elapsed = time.time() - self.start_time
        with self.lock:
            finished = self.done + self.failed
            rate = finished / elapsed if elapsed > 0 else 0.0
            return (f"[{elapsed:.0f}s] {self.label}: {finished}/{self.total} | "
                    f"failed: {self.failed} | rate: {rate:.1f}/s")

    def _monitor_loop(self):
        while self.running:
            time.sleep(self.interval)
            if self.running:
                print(self.format_line(), file=self.stream)

    def __enter__(self):
        self.start_monitoring()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.stop_monitoring()
        return False
