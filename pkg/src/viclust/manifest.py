"""Run manifest: config echo, tool version, and per-step content hashes.

The manifest records a sha256 per input and output file of every step, so
a replay of the same config on the same inputs is verifiable hash by
hash. Step entries are keyed by step name; re-running a single step
replaces only its own entry.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from pathlib import Path

from . import __version__
from .config import RunConfig

PIPELINE_ORDER = ("ingest", "select", "pca", "elbow", "cluster", "stability", "profile")


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(cfg: RunConfig) -> str:
    payload = json.dumps(cfg.to_json_dict(), sort_keys=True).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def resolve_timestamp(cfg: RunConfig) -> str:
    """ISO-8601 UTC stamp: config value, then SOURCE_DATE_EPOCH, then wall clock."""
    if cfg.run_timestamp:
        return cfg.run_timestamp
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = int(epoch) if epoch else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(when))


class ManifestBuilder:
    def __init__(self, cfg: RunConfig, out_dir: Path) -> None:
        self.cfg = cfg
        self.out_dir = out_dir
        self.path = out_dir / "manifest.json"
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                self.doc = json.load(fh)
        else:
            self.doc = {"steps": {}}
        self.doc["tool"] = "viclust"
        self.doc["version"] = __version__
        self.doc["config"] = cfg.to_json_dict()
        self.doc["config_hash"] = config_hash(cfg)
        self.doc["timestamp"] = resolve_timestamp(cfg)

    def record_step(
        self,
        name: str,
        inputs: list[str | Path],
        outputs: list[str | Path],
        notes: dict | None = None,
    ) -> None:
        entry = {
            "inputs": {Path(p).name: file_sha256(p) for p in inputs},
            "outputs": {Path(p).name: file_sha256(p) for p in outputs},
            "timestamp": self.doc["timestamp"],
        }
        if notes:
            entry["notes"] = notes
        self.doc["steps"][name] = entry

    def write(self) -> Path:
        def position(name: str) -> tuple[int, str]:
            if name in PIPELINE_ORDER:
                return (PIPELINE_ORDER.index(name), name)
            return (len(PIPELINE_ORDER), name)

        ordered = dict(sorted(self.doc["steps"].items(), key=lambda kv: position(kv[0])))
        doc = dict(self.doc)
        doc["steps"] = ordered
        doc["step_order"] = list(ordered)
        self.path.write_bytes((json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8"))
        return self.path
