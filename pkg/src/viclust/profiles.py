"""Descriptive outputs: centroid tables, cross-tabs, cluster characterizations.

Cluster narratives are driven by the index centroids and the component
loadings, not by re-aggregated raw variables: a variable is elevated in a
cluster when the sign of the cluster's centroid on an index matches the
sign of the variable's substantive loading on that index, and reduced
when the signs oppose.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .ingest import STATE_CODES, RegionRecord
from .cluster import ClusterModel
from .pca import IndexScores, PcaModel, substantive_loadings

AXIS_REMOTENESS = "remoteness"
AXIS_STATE = "state"

EFFECT_ELEVATED = "elevated"
EFFECT_REDUCED = "reduced"


@dataclass(frozen=True)
class ClusterStats:
    label: int
    size: int
    means: tuple[float, ...]
    sds: tuple[float, ...]
    singleton: bool
    dominant_indices: tuple[str, ...]


@dataclass(frozen=True)
class ClusterProfile:
    index_names: tuple[str, ...]
    clusters: tuple[ClusterStats, ...]

    @property
    def total_regions(self) -> int:
        return sum(c.size for c in self.clusters)


@dataclass(frozen=True)
class CrossTab:
    axis: str
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    counts: np.ndarray
    row_totals: tuple[int, ...]
    col_totals: tuple[int, ...]
    grand_total: int


@dataclass(frozen=True)
class IndexEffect:
    short_form: str
    loading: float
    effect: str


@dataclass(frozen=True)
class IndexContribution:
    index: str
    centroid: float
    variables: tuple[IndexEffect, ...]


@dataclass(frozen=True)
class ClusterCharacterization:
    label: int
    size: int
    contributions: tuple[IndexContribution, ...]


def centroid_table(c: ClusterModel, s: IndexScores) -> ClusterProfile:
    """Per-cluster size, per-index mean and sample sd (sd of a singleton is 0)."""
    if len(s.region_ids) != c.assignments.shape[0]:
        raise DataError("cluster assignments and scores cover different regions")
    names = tuple(s.index_names())
    stats = []
    for label in range(1, c.k + 1):
        members = c.assignments == label
        size = int(members.sum())
        block = s.scores[members]
        means = tuple(float(x) for x in block.mean(axis=0))
        if size > 1:
            sds = tuple(float(x) for x in block.std(axis=0, ddof=1))
        else:
            sds = tuple(0.0 for _ in names)
        ranking = sorted(range(len(names)), key=lambda j: (-abs(means[j]), j))
        stats.append(
            ClusterStats(
                label=label,
                size=size,
                means=means,
                sds=sds,
                singleton=size == 1,
                dominant_indices=tuple(names[j] for j in ranking),
            )
        )
    return ClusterProfile(index_names=names, clusters=tuple(stats))


def crosstab(c: ClusterModel, regions: list[RegionRecord], axis: str) -> CrossTab:
    """Contingency counts of cluster membership against remoteness or state."""
    if len(regions) != c.assignments.shape[0]:
        raise DataError("cluster assignments and region list differ in length")
    if axis == AXIS_REMOTENESS:
        categories = tuple(str(v) for v in (1, 2, 3, 4, 5))
        def key(r: RegionRecord) -> str:
            if r.remoteness is None:
                raise DataError(f"region {r.region_id!r} has no remoteness value")
            return str(r.remoteness)
    elif axis == AXIS_STATE:
        categories = STATE_CODES
        def key(r: RegionRecord) -> str:
            return r.state
    else:
        raise DataError(f"unknown cross-tab axis {axis!r}")

    row_index = {cat: i for i, cat in enumerate(categories)}
    counts = np.zeros((len(categories), c.k), dtype=int)
    for region, label in zip(regions, c.assignments):
        counts[row_index[key(region)], int(label) - 1] += 1
    return CrossTab(
        axis=axis,
        row_labels=categories,
        col_labels=tuple(f"C{j + 1}" for j in range(c.k)),
        counts=counts,
        row_totals=tuple(int(x) for x in counts.sum(axis=1)),
        col_totals=tuple(int(x) for x in counts.sum(axis=0)),
        grand_total=int(counts.sum()),
    )


def characterize(
    c: ClusterModel,
    m: PcaModel,
    s: IndexScores,
    threshold: float = 0.20,
) -> tuple[ClusterCharacterization, ...]:
    """Pure function of (centroids, loadings, threshold).

    Per cluster, indices are ranked by |centroid|; an index with a zero
    centroid contributes nothing. Each ranked index lists its substantive
    variables with effect direction sign(centroid) * sign(loading).
    """
    if len(s.region_ids) != c.assignments.shape[0]:
        raise DataError("cluster assignments and scores cover different regions")
    loaded = substantive_loadings(m, threshold)
    names = s.index_names()
    if len(names) != c.centroids.shape[1]:
        raise DataError("centroid width does not match the retained index count")
    out = []
    for label in range(1, c.k + 1):
        centroid = c.centroids[label - 1]
        order = sorted(range(len(names)), key=lambda j: (-abs(float(centroid[j])), j))
        contributions = []
        for j in order:
            value = float(centroid[j])
            if value == 0.0:
                continue
            centroid_sign = 1 if value > 0 else -1
            effects = tuple(
                IndexEffect(
                    short_form=short,
                    loading=weight,
                    effect=EFFECT_ELEVATED if centroid_sign * sign > 0 else EFFECT_REDUCED,
                )
                for short, weight, sign in loaded[j]
            )
            contributions.append(
                IndexContribution(index=names[j], centroid=value, variables=effects)
            )
        size = int((c.assignments == label).sum())
        out.append(
            ClusterCharacterization(
                label=label, size=size, contributions=tuple(contributions)
            )
        )
    return tuple(out)


# --- serialization ----------------------------------------------------------


def _json_bytes(obj: dict) -> bytes:
    return (json.dumps(obj, indent=2) + "\n").encode("utf-8")


def write_scores_csv(s: IndexScores, path: str | Path) -> None:
    lines = ["region_id," + ",".join(s.index_names())]
    for i, rid in enumerate(s.region_ids):
        lines.append(rid + "," + ",".join(repr(float(x)) for x in s.scores[i]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_scores_csv(path: str | Path) -> IndexScores:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln]
    header = lines[0].split(",")
    if header[0] != "region_id":
        raise DataError("scores file must start with a region_id column")
    region_ids = []
    rows = []
    for ln in lines[1:]:
        cells = ln.split(",")
        region_ids.append(cells[0])
        rows.append([float(c) for c in cells[1:]])
    return IndexScores(region_ids=tuple(region_ids), scores=np.array(rows, dtype=float))


def write_assignments_csv(
    c: ClusterModel, region_ids: tuple[str, ...] | list[str], path: str | Path
) -> None:
    lines = ["region_id,cluster"]
    for rid, label in zip(region_ids, c.assignments):
        lines.append(f"{rid},{int(label)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_crosstab_csv(tab: CrossTab, path: str | Path) -> None:
    lines = [tab.axis + "," + ",".join(tab.col_labels) + ",total"]
    for i, row_label in enumerate(tab.row_labels):
        cells = ",".join(str(int(x)) for x in tab.counts[i])
        lines.append(f"{row_label},{cells},{tab.row_totals[i]}")
    lines.append(
        "total," + ",".join(str(t) for t in tab.col_totals) + f",{tab.grand_total}"
    )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def profile_json_dict(
    profile: ClusterProfile,
    characterizations: tuple[ClusterCharacterization, ...],
) -> dict:
    by_label = {ch.label: ch for ch in characterizations}
    clusters = []
    for stats in profile.clusters:
        ch = by_label.get(stats.label)
        clusters.append(
            {
                "cluster": stats.label,
                "size": stats.size,
                "singleton": stats.singleton,
                "means": dict(zip(profile.index_names, stats.means)),
                "sds": dict(zip(profile.index_names, stats.sds)),
                "dominant_indices": list(stats.dominant_indices),
                "contributions": [
                    {
                        "index": con.index,
                        "centroid": con.centroid,
                        "variables": [
                            {
                                "short_form": eff.short_form,
                                "loading": eff.loading,
                                "effect": eff.effect,
                            }
                            for eff in con.variables
                        ],
                    }
                    for con in (ch.contributions if ch else ())
                ],
            }
        )
    return {"index_names": list(profile.index_names), "clusters": clusters}


def write_profile_json(
    profile: ClusterProfile,
    characterizations: tuple[ClusterCharacterization, ...],
    path: str | Path,
) -> None:
    Path(path).write_bytes(_json_bytes(profile_json_dict(profile, characterizations)))


def write_atlas_geojson(
    boundaries_path: str | Path,
    s: IndexScores,
    c: ClusterModel,
    path: str | Path,
) -> None:
    """Join scores and cluster labels onto boundary features.

    Features whose region was omitted from the analysis (or never appeared
    in it) are kept with null index and cluster properties so downstream
    choropleth tools can render them distinctly.
    """
    with open(boundaries_path, encoding="utf-8") as fh:
        doc = json.load(fh)
    index_names = s.index_names()
    row_of = {rid: i for i, rid in enumerate(s.region_ids)}
    features = []
    for feature in doc.get("features", []):
        props = dict(feature.get("properties") or {})
        rid = props.get("region_id")
        rid = None if rid is None else str(rid)
        if rid is not None and rid in row_of:
            i = row_of[rid]
            for j, name in enumerate(index_names):
                props[name] = float(s.scores[i, j])
            props["cluster"] = int(c.assignments[i])
        else:
            for name in index_names:
                props[name] = None
            props["cluster"] = None
        features.append(
            {
                "type": "Feature",
                "properties": props,
                "geometry": feature.get("geometry"),
            }
        )
    out = {"type": "FeatureCollection", "features": features}
    Path(path).write_bytes((json.dumps(out, separators=(",", ":")) + "\n").encode("utf-8"))
