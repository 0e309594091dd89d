"""On-disk result cache keyed by operation, canonical parameters and code version."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

from . import __version__

log = logging.getLogger(__name__)

ENV_VAR = "THETA_MOMENT_CACHE"


def default_cache_dir() -> Path:
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return Path(base) / "theta-moments"


def cache_key(module: str, op: str, params: dict, version: str = __version__) -> str:
    blob = json.dumps({"module": module, "op": op, "params": params, "version": version},
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True)
class CacheEntry:
    key: str
    value: str
    created_at: float
    version: str


class ResultCache:
    """Directory of JSON entries; writes go to a temp file and are renamed into place."""

    def __init__(self, directory: str | os.PathLike | None = None, version: str = __version__):
        self.directory = Path(directory) if directory is not None else default_cache_dir()
        self.version = version

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def key(self, module: str, op: str, params: dict) -> str:
        return cache_key(module, op, params, self.version)

    def lookup(self, key: str) -> CacheEntry | None:
        path = self._path(key)
        try:
            raw = path.read_text()
        except FileNotFoundError:
            return None
        try:
            doc = json.loads(raw)
            entry = CacheEntry(doc["key"], doc["value"], float(doc["created_at"]), doc["version"])
            if entry.key != key or not isinstance(entry.value, str):
                raise ValueError("key mismatch")
        except (ValueError, KeyError, TypeError):
            log.warning("discarding corrupt cache entry %s", path)
            try:
                path.unlink()
            except FileNotFoundError:
                pass
            return None
        if entry.version != self.version:
            return None
        return entry

    def store(self, key: str, value: str) -> CacheEntry:
        self.directory.mkdir(parents=True, exist_ok=True)
        entry = CacheEntry(key, value, time.time(), self.version)
        doc = {"key": key, "value": value, "created_at": entry.created_at, "version": self.version}
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(doc, fh)
            os.replace(tmp, self._path(key))
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return entry
