"""Content-addressed response cache, one file per entry.

Layout::

    <root>/<first two hex chars of key>/<key>.txt
    <root>/index.tsv        key, model_id, created_at
"""

from __future__ import annotations

import os
import tempfile
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path


@dataclass(frozen=True)
class CacheEntry:
    key: str
    value: str
    created_at: str


class FileCache:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._index_lock = threading.Lock()
        self._key_locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.txt"

    def _lock_for(self, key: str) -> threading.Lock:
        with self._locks_guard:
            return self._key_locks.setdefault(key, threading.Lock())

    def get(self, key: str) -> str | None:
        p = self._path(key)
        if not p.is_file():
            return None
        return p.read_text(encoding="utf-8")

    def __contains__(self, key: str) -> bool:
        return self._path(key).is_file()

    def put(self, key: str, value: str, model_id: str = "") -> CacheEntry:
        """Store ``value`` under ``key``. Existing entries are never overwritten."""
        with self._lock_for(key):
            p = self._path(key)
            if p.is_file():
                return CacheEntry(key, p.read_text(encoding="utf-8"), "")
            p.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=p.parent, suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(value)
            os.replace(tmp, p)
            created = datetime.now(timezone.utc).isoformat(timespec="seconds")
            with self._index_lock, (self.root / "index.tsv").open("a", encoding="utf-8") as fh:
                fh.write(f"{key}\t{model_id}\t{created}\n")
            return CacheEntry(key, value, created)

    def index(self) -> list[tuple[str, str, str]]:
        p = self.root / "index.tsv"
        if not p.is_file():
            return []
        return [tuple(line.split("\t")) for line in p.read_text(encoding="utf-8").splitlines() if line]
