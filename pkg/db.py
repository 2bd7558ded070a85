"""
db.py — Warm-cache store for series and tables.

Persists Series values as JSON files (the series JSON schema) under
$UIPT_LAB_CACHE_DIR, one file per key. When the variable is unset every
lookup misses and writes are dropped, so callers never branch on it.

Usage (as module):
    from db import get_store
    store = get_store()
    cached = store.load_series("boundary/p=3", min_order=60)
    if cached is None:
        store.save_series("boundary/p=3", computed)
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from pathlib import Path

from execution.config import cache_dir
from execution.errors import SeriesError
from execution.reporting import warn
from execution.series import Series

_SAFE_KEY = re.compile(r"[^A-Za-z0-9_.=-]+")


def _filename(key: str) -> str:
    return _SAFE_KEY.sub("_", key.replace("/", "__")) + ".json"


class NullStore:
    """Store used when no cache directory is configured."""

    root = None

    def load_series(self, key: str, min_order: int = 0) -> Series | None:
        return None

    def save_series(self, key: str, series: Series) -> None:
        return None

    def keys(self) -> list[str]:
        return []


class CacheStore:
    """Directory of JSON-serialized series keyed by name."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.root / _filename(key)

    def load_series(self, key: str, min_order: int = 0) -> Series | None:
        """Return the cached series, or None when absent, unreadable or too short."""
        path = self._path(key)
        if not path.exists():
            return None
        try:
            series = Series.from_json(json.loads(path.read_text(encoding="utf-8")))
        except (OSError, ValueError, KeyError, SeriesError) as e:
            warn(f"ignoring unreadable cache entry {path.name}: {e}")
            return None
        if series.order < min_order:
            return None
        return series

    def save_series(self, key: str, series: Series) -> None:
        path = self._path(key)
        payload = json.dumps({"key": key, **series.to_json()})
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                f.write(payload)
            os.replace(tmp, path)
        except OSError as e:
            warn(f"could not write cache entry {path.name}: {e}")
            try:
                os.unlink(tmp)
            except OSError:
                pass

    def keys(self) -> list[str]:
        out = []
        for path in sorted(self.root.glob("*.json")):
            try:
                out.append(json.loads(path.read_text(encoding="utf-8")).get("key", path.stem))
            except (OSError, ValueError):
                continue
        return out


def get_store() -> CacheStore | NullStore:
    """Store for $UIPT_LAB_CACHE_DIR, or a NullStore when it is unset."""
    root = cache_dir()
    return CacheStore(root) if root else NullStore()
