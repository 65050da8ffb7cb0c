"""Run configuration: defaults, JSON loading, and validation.

Every stochastic choice in a run flows from the configured seeds; nothing
is drawn from the clock or OS entropy. The optional ``run_timestamp``
(ISO-8601) is echoed into the manifest; when unset, the SOURCE_DATE_EPOCH
environment variable and finally the wall clock are consulted, in that
order. Pin it (or SOURCE_DATE_EPOCH) to make full output directories
byte-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .cluster import DEFAULT_SEEDS, INIT_FORGY, INIT_KMEANSPP
from .errors import DataError
from .pca import RETENTION_CUMULATIVE, RETENTION_FIRST_ONLY, RETENTION_KAISER


@dataclass
class RunConfig:
    values: str
    regions: str
    erp_variable: str
    output_dir: str
    variables: str | None = None
    boundaries: str | None = None
    adjacency: str | None = None
    manual_removals: tuple[str, ...] = ()
    missing_flag_threshold: float = 0.10
    snap_tolerance: float = 0.0
    skew_threshold: float = 2.0
    corr_threshold: float = 0.90
    retention: str = RETENTION_KAISER
    retention_param: float = 1.0
    loading_threshold: float = 0.20
    k: int | None = None
    k_max: int = 10
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    init: str = INIT_FORGY
    restarts: int = 25
    threads: int = 1
    run_timestamp: str | None = None

    def validate(self) -> None:
        for name in ("skew_threshold", "corr_threshold", "retention_param",
                     "loading_threshold", "missing_flag_threshold"):
            if getattr(self, name) <= 0:
                raise DataError(f"{name} must be positive")
        if self.snap_tolerance < 0:
            raise DataError("snap_tolerance must be >= 0")
        if not self.seeds:
            raise DataError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise DataError("seeds must be distinct")
        if self.init not in (INIT_FORGY, INIT_KMEANSPP):
            raise DataError(f"unknown init {self.init!r}")
        if self.retention not in (RETENTION_KAISER, RETENTION_FIRST_ONLY,
                                  RETENTION_CUMULATIVE):
            raise DataError(f"unknown retention strategy {self.retention!r}")
        if self.k is not None and self.k < 1:
            raise DataError("k must be >= 1 when given")
        if self.k_max < 2:
            raise DataError("k_max must be >= 2")
        if self.restarts < 1:
            raise DataError("restarts must be >= 1")
        if self.threads < 1:
            raise DataError("threads must be >= 1")
        if self.boundaries and self.adjacency:
            raise DataError("give either boundaries or an adjacency list, not both")

    @property
    def main_seed(self) -> int:
        return self.seeds[0]

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["manual_removals"] = list(self.manual_removals)
        d["seeds"] = list(self.seeds)
        return d

    @classmethod
    def from_json_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise DataError(f"unknown config key(s): {', '.join(unknown)}")
        missing = [name for name in ("values", "regions", "erp_variable", "output_dir")
                   if name not in data]
        if missing:
            raise DataError(f"config lacks required key(s): {', '.join(missing)}")
        kwargs = dict(data)
        if "manual_removals" in kwargs:
            kwargs["manual_removals"] = tuple(kwargs["manual_removals"])
        if "seeds" in kwargs:
            kwargs["seeds"] = tuple(int(x) for x in kwargs["seeds"])
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def from_json_file(cls, path: str | Path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))
