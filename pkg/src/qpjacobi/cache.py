"""Content-addressed result cache guarded by advisory file locks."""
from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

from filelock import FileLock

from . import __version__


def inputs_digest(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=repr)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


class ResultCache:
    """Payloads keyed by ``(config hash, operation, inputs digest, code version)``.

    Each entry stores a checksum of its payload; entries that fail to parse or verify are
    deleted and reported as misses.
    """

    def __init__(self, root, version: str = __version__):
        self.root = Path(root)
        self.version = version

    def _path(self, config_hash: str, operation: str, digest: str) -> Path:
        key = hashlib.sha256(f"{self.version}|{config_hash}|{operation}|{digest}".encode()).hexdigest()
        return self.root / key[:2] / f"{key}.json"

    def get(self, config_hash: str, operation: str, digest: str):
        path = self._path(config_hash, operation, digest)
        if not path.exists():
            return None
        with FileLock(str(path) + ".lock"):
            try:
                record = json.loads(path.read_text(encoding="utf-8"))
                body = json.dumps(record["payload"], sort_keys=True)
                if hashlib.sha256(body.encode()).hexdigest() != record["checksum"] or record["version"] != self.version:
                    raise ValueError("checksum or version mismatch")
                return record["payload"]
            except (ValueError, KeyError, TypeError):
                path.unlink(missing_ok=True)
                return None

    def put(self, config_hash: str, operation: str, digest: str, payload, wall_time: float = 0.0):
        path = self._path(config_hash, operation, digest)
        path.parent.mkdir(parents=True, exist_ok=True)
        body = json.dumps(payload, sort_keys=True)
        record = {
            "version": self.version,
            "config_hash": config_hash,
            "operation": operation,
            "inputs_digest": digest,
            "wall_time": wall_time,
            "checksum": hashlib.sha256(body.encode()).hexdigest(),
            "payload": payload,
        }
        with FileLock(str(path) + ".lock"):
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(record, sort_keys=True), encoding="utf-8")
            os.replace(tmp, path)
