"""File-based email outbox (NDJSON, append-only).

Stands in for SMTP delivery: each sent mail is one JSON line. A failed append
raises StorageUnavailable so the triggering operation fails visibly instead of
silently dropping mail.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from .errors import StorageUnavailable


class Outbox:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, record: dict) -> dict:
        line = json.dumps(record, sort_keys=True)
        try:
            with self._lock:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(line + "\n")
        except OSError as exc:
            raise StorageUnavailable(f"outbox append failed: {exc}") from exc
        return record

    def records(self) -> list[dict]:
        if not self.path.exists():
            return []
        with open(self.path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]
