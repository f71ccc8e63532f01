import os
import json
import time
import threading
import uuid
from dataclasses import dataclass, asdict
from typing import Optional


@dataclass
class JournalEntry:
    timestamp: float
    execution_id: str
    scope: str
    event_type: str
    duration: float = None
    detail: str = None


class RunJournal:
    """Append-only JSON-lines event log, one file per scope.

    With log_dir=None the journal is disabled and never touches the filesystem.
    """

    def __init__(self, log_dir: Optional[str] = None, execution_id: str = None):
        self.execution_id = execution_id or str(uuid.uuid4())[:8]
        self.log_dir = log_dir
        self.locks = {}
        self._locks_guard = threading.Lock()
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)

    @property
    def enabled(self) -> bool:
        return bool(self.log_dir)

    def _get_log_file(self, scope: str) -> str:
        return os.path.join(self.log_dir, f"{self.execution_id}_{scope}.log")

    def _get_lock(self, scope: str) -> threading.Lock:
        with self._locks_guard:
            if scope not in self.locks:
                self.locks[scope] = threading.Lock()
            return self.locks[scope]

    def log(self, scope: str, event_type: str, duration: float = None, detail: str = None):
        if not self.enabled:
            return
        entry = JournalEntry(
            timestamp=time.time(),
            execution_id=self.execution_id,
            scope=scope,
            event_type=event_type,
            duration=duration,
            detail=detail
        )
        with self._get_lock(scope):
            with open(self._get_log_file(scope), 'a', encoding='utf-8') as f:
                f.write(json.dumps(asdict(entry)) + '\n')

    def read(self, scope: str):
        """Entries logged so far for a scope"""
        if not self.enabled or not os.path.exists(self._get_log_file(scope)):
            return []
        with open(self._get_log_file(scope), encoding='utf-8') as f:
            return [json.loads(line) for line in f if line.strip()]


NULL_JOURNAL = RunJournal()
