"""Load and validate the region-by-variable table and region metadata.

Input files (all UTF-8 CSV, ``.`` decimal separator):

* ``values.csv``    header ``region_id,<short_form_1>,...,<short_form_p>``,
  one row per region; a cell is missing when empty or the literal ``NA``.
* ``regions.csv``   header ``region_id,name,state,remoteness,is_spatial``.
* ``variables.csv`` header ``short_form,long_name`` (optional; long names
  default to the short form when the file is not supplied).

Row and column order of ``values.csv`` is the canonical order for every
downstream operation, which keeps all outputs deterministic.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

STATE_CODES = ("NSW", "VIC", "QLD", "SA", "WA", "TAS", "NT", "ACT", "OTHER")
REMOTENESS_LEVELS = (1, 2, 3, 4, 5)
MISSING_TOKENS = ("", "NA")

OMIT_ZERO_ERP = "zero_erp"
OMIT_NA_ERP = "na_erp"
OMIT_NON_SPATIAL = "non_spatial"

TRANSFORM_NONE = "none"
TRANSFORM_LOG1P = "log1p"


@dataclass(frozen=True)
class RegionRecord:
    region_id: str
    name: str
    state: str
    remoteness: int | None
    is_spatial: bool = True

    def __post_init__(self) -> None:
        if self.state not in STATE_CODES:
            raise DataError(
                f"region {self.region_id!r}: unknown state code {self.state!r} "
                f"(expected one of {', '.join(STATE_CODES)})"
            )
        if self.remoteness is not None and self.remoteness not in REMOTENESS_LEVELS:
            raise DataError(
                f"region {self.region_id!r}: remoteness must be in 1..5, got {self.remoteness!r}"
            )


@dataclass(frozen=True)
class VariableMeta:
    short_form: str
    long_name: str
    transform_applied: str = TRANSFORM_NONE

    def __post_init__(self) -> None:
        if self.transform_applied not in (TRANSFORM_NONE, TRANSFORM_LOG1P):
            raise DataError(f"unknown transform {self.transform_applied!r}")


@dataclass(eq=False)
class Dataset:
    """Rectangular region-by-variable table; missing cells are NaN."""

    regions: list[RegionRecord]
    variables: list[VariableMeta]
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        n, p = len(self.regions), len(self.variables)
        if self.values.shape != (n, p):
            raise DataError(
                f"value matrix is {self.values.shape}, expected ({n}, {p})"
            )
        ids = [r.region_id for r in self.regions]
        if len(set(ids)) != n:
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise DataError(f"duplicate region_id: {', '.join(dupes)}")
        names = [v.short_form for v in self.variables]
        if len(set(names)) != p:
            dupes = sorted({s for s in names if names.count(s) > 1})
            raise DataError(f"duplicate variable short_form: {', '.join(dupes)}")
        if np.isinf(self.values).any():
            raise DataError("value matrix contains infinite entries")

    @property
    def n(self) -> int:
        return len(self.regions)

    @property
    def p(self) -> int:
        return len(self.variables)

    @property
    def region_ids(self) -> list[str]:
        return [r.region_id for r in self.regions]

    @property
    def short_forms(self) -> list[str]:
        return [v.short_form for v in self.variables]

    def variable_index(self, short_form: str) -> int:
        for j, v in enumerate(self.variables):
            if v.short_form == short_form:
                return j
        raise DataError(f"variable {short_form!r} not found")

    def column(self, short_form: str) -> np.ndarray:
        return self.values[:, self.variable_index(short_form)]

    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.values)

    def copy(self) -> "Dataset":
        return Dataset(list(self.regions), list(self.variables), self.values.copy())


@dataclass(frozen=True)
class OmissionLog:
    """Regions dropped before analysis, with the rule that removed each."""

    removed: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        ids = [r for r, _ in self.removed]
        if len(set(ids)) != len(ids):
            raise DataError("a region appears more than once in the omission log")

    def __len__(self) -> int:
        return len(self.removed)


@dataclass(frozen=True)
class VariableCheck:
    short_form: str
    missing: int
    zeros: int
    fraction: float
    flagged: bool


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[VariableCheck, ...]
    flag_threshold: float

    @property
    def flagged(self) -> list[str]:
        return [c.short_form for c in self.checks if c.flagged]

    def to_json_dict(self) -> dict:
        return {
            "flag_threshold": self.flag_threshold,
            "variables": [
                {
                    "short_form": c.short_form,
                    "missing": c.missing,
                    "zeros": c.zeros,
                    "fraction": c.fraction,
                    "flagged": c.flagged,
                }
                for c in self.checks
            ],
        }


def _read_rows(path: Path, expected_header: list[str], what: str) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{what} file {path} is empty") from None
        if header != expected_header:
            raise DataError(
                f"{what} file {path}: header {header!r} does not match {expected_header!r}"
            )
        return [row for row in reader if row]


def _parse_bool(token: str, context: str) -> bool:
    t = token.strip().lower()
    if t in ("true", "1"):
        return True
    if t in ("false", "0"):
        return False
    raise DataError(f"{context}: expected true/false, got {token!r}")


def load_regions(path: str | Path) -> list[RegionRecord]:
    rows = _read_rows(Path(path), ["region_id", "name", "state", "remoteness", "is_spatial"], "regions")
    records = []
    seen: set[str] = set()
    for row in rows:
        if len(row) != 5:
            raise DataError(f"regions file: row {row!r} does not have 5 fields")
        region_id, name, state, remoteness, is_spatial = (c.strip() for c in row)
        if region_id in seen:
            raise DataError(f"duplicate region_id {region_id!r} in regions file")
        seen.add(region_id)
        if remoteness in MISSING_TOKENS:
            rem: int | None = None
        else:
            try:
                rem = int(remoteness)
            except ValueError:
                raise DataError(
                    f"region {region_id!r}: remoteness {remoteness!r} is not an integer"
                ) from None
        records.append(
            RegionRecord(
                region_id=region_id,
                name=name,
                state=state,
                remoteness=rem,
                is_spatial=_parse_bool(is_spatial, f"region {region_id!r} is_spatial"),
            )
        )
    return records


def load_variables(path: str | Path) -> list[VariableMeta]:
    rows = _read_rows(Path(path), ["short_form", "long_name"], "variables")
    metas = []
    seen: set[str] = set()
    for row in rows:
        if len(row) != 2:
            raise DataError(f"variables file: row {row!r} does not have 2 fields")
        short, long_name = row[0].strip(), row[1].strip()
        if short in seen:
            raise DataError(f"duplicate short_form {short!r} in variables file")
        seen.add(short)
        metas.append(VariableMeta(short_form=short, long_name=long_name))
    return metas


def _parse_cell(token: str, region_id: str, short_form: str) -> float:
    t = token.strip()
    if t in MISSING_TOKENS:
        return math.nan
    try:
        x = float(t)
    except ValueError:
        raise DataError(
            f"cell ({region_id!r}, {short_form!r}): {token!r} is neither numeric "
            f"nor a missing marker"
        ) from None
    if math.isnan(x) or math.isinf(x):
        raise DataError(
            f"cell ({region_id!r}, {short_form!r}): {token!r} is not a finite number"
        )
    return x


def load_dataset(
    values_path: str | Path,
    regions_path: str | Path,
    variables_path: str | Path | None = None,
) -> Dataset:
    """Assemble a Dataset from the three CSV inputs.

    Column order follows the values header; row order follows the values
    rows. Region metadata must cover exactly the regions present in the
    values file.
    """
    values_path = Path(values_path)
    with open(values_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"values file {values_path} is empty") from None
        if not header or header[0] != "region_id":
            raise DataError("values file: first header field must be 'region_id'")
        short_forms = [h.strip() for h in header[1:]]
        if not short_forms:
            raise DataError("values file declares no variables")
        if len(set(short_forms)) != len(short_forms):
            dupes = sorted({s for s in short_forms if short_forms.count(s) > 1})
            raise DataError(f"duplicate variable short_form: {', '.join(dupes)}")
        raw_rows = [row for row in reader if row]

    meta_by_id = {r.region_id: r for r in load_regions(regions_path)}

    if variables_path is not None:
        metas = load_variables(variables_path)
        by_short = {m.short_form: m for m in metas}
        unknown = [s for s in short_forms if s not in by_short]
        if unknown:
            raise DataError(
                f"variables file lacks metadata for: {', '.join(unknown)}"
            )
        extra = [m.short_form for m in metas if m.short_form not in set(short_forms)]
        if extra:
            raise DataError(
                f"variables file lists variables absent from values: {', '.join(extra)}"
            )
        variables = [by_short[s] for s in short_forms]
    else:
        variables = [VariableMeta(short_form=s, long_name=s) for s in short_forms]

    p = len(short_forms)
    regions: list[RegionRecord] = []
    seen: set[str] = set()
    data = np.empty((len(raw_rows), p), dtype=float)
    for i, row in enumerate(raw_rows):
        if len(row) != p + 1:
            raise DataError(
                f"values file row {i + 2}: expected {p + 1} fields, got {len(row)}"
            )
        region_id = row[0].strip()
        if region_id in seen:
            raise DataError(f"duplicate region_id {region_id!r} in values file")
        seen.add(region_id)
        if region_id not in meta_by_id:
            raise DataError(f"region {region_id!r} has no entry in the regions file")
        regions.append(meta_by_id[region_id])
        for j, token in enumerate(row[1:]):
            data[i, j] = _parse_cell(token, region_id, short_forms[j])

    unmatched = sorted(set(meta_by_id) - seen)
    if unmatched:
        raise DataError(
            f"regions file lists regions absent from values: {', '.join(unmatched)}"
        )
    return Dataset(regions=regions, variables=variables, values=data)


def format_value(x: float) -> str:
    """Canonical cell text: NA for missing, shortest round-trip repr otherwise."""
    if math.isnan(x):
        return "NA"
    return repr(float(x))


def save_dataset(d: Dataset, values_path: str | Path) -> None:
    """Serialize values in the canonical form (repr floats, NA, LF endings)."""
    lines = ["region_id," + ",".join(d.short_forms)]
    for i, region in enumerate(d.regions):
        cells = [format_value(x) for x in d.values[i]]
        lines.append(region.region_id + "," + ",".join(cells))
    Path(values_path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def save_regions(regions: list[RegionRecord], path: str | Path) -> None:
    lines = ["region_id,name,state,remoteness,is_spatial"]
    for r in regions:
        rem = "" if r.remoteness is None else str(r.remoteness)
        spatial = "true" if r.is_spatial else "false"
        name = r.name
        if any(ch in name for ch in ",\"\n"):
            name = '"' + name.replace('"', '""') + '"'
        lines.append(f"{r.region_id},{name},{r.state},{rem},{spatial}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def omit_unpopulated_regions(d: Dataset, erp_variable: str) -> tuple[Dataset, OmissionLog]:
    """Drop non-spatial regions and regions with missing or zero population.

    Reason precedence when several rules apply: non_spatial, then na_erp,
    then zero_erp. Surviving rows keep their original order, so the call
    is idempotent.
    """
    erp_col = d.column(erp_variable)
    keep: list[int] = []
    removed: list[tuple[str, str]] = []
    for i, region in enumerate(d.regions):
        if not region.is_spatial:
            removed.append((region.region_id, OMIT_NON_SPATIAL))
        elif math.isnan(erp_col[i]):
            removed.append((region.region_id, OMIT_NA_ERP))
        elif erp_col[i] == 0.0:
            removed.append((region.region_id, OMIT_ZERO_ERP))
        else:
            keep.append(i)
    survivors = Dataset(
        regions=[d.regions[i] for i in keep],
        variables=list(d.variables),
        values=d.values[keep, :].copy(),
    )
    return survivors, OmissionLog(removed=tuple(removed))


def validate_dataset(d: Dataset, flag_threshold: float = 0.10) -> ValidationReport:
    """Report missing and zero counts per variable.

    A variable is flagged when (missing + zeros) / n strictly exceeds the
    threshold; flagged variables are candidates for manual removal, never
    removed automatically.
    """
    n = d.n
    checks = []
    for j, v in enumerate(d.variables):
        col = d.values[:, j]
        missing = int(np.isnan(col).sum())
        zeros = int((col == 0.0).sum())
        fraction = (missing + zeros) / n if n else 0.0
        checks.append(
            VariableCheck(
                short_form=v.short_form,
                missing=missing,
                zeros=zeros,
                fraction=fraction,
                flagged=fraction > flag_threshold,
            )
        )
    return ValidationReport(checks=tuple(checks), flag_threshold=flag_threshold)
