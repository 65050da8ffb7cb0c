"""Region contiguity and neighbor-mean imputation.

Two regions are neighbors under the queen rule: their boundaries share at
least one point, whether a common vertex, a crossing, a touch, or a
collinear overlap of edges. Comparison is exact by default; a snap
tolerance widens it for re-projected inputs whose vertices no longer
match bit-for-bit.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, DegenerateColumnError, GeometryError
from .ingest import Dataset

SOURCE_NEIGHBOR_MEAN = "neighbor_mean"
SOURCE_COLUMN_MEAN = "column_mean"


@dataclass(frozen=True)
class AdjacencyGraph:
    """Symmetric, irreflexive contiguity relation over an ordered region list."""

    region_ids: tuple[str, ...]
    neighbors: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        if len(self.region_ids) != len(self.neighbors):
            raise GeometryError("region list and neighbor sets differ in length")
        if len(set(self.region_ids)) != len(self.region_ids):
            raise GeometryError("duplicate region_id in adjacency graph")
        n = len(self.region_ids)
        for i, nbrs in enumerate(self.neighbors):
            if i in nbrs:
                raise GeometryError(f"region {self.region_ids[i]!r} neighbors itself")
            for j in nbrs:
                if not 0 <= j < n:
                    raise GeometryError("neighbor index out of range")
                if i not in self.neighbors[j]:
                    raise GeometryError(
                        f"asymmetric adjacency between {self.region_ids[i]!r} "
                        f"and {self.region_ids[j]!r}"
                    )

    @classmethod
    def from_edges(
        cls, region_ids: list[str] | tuple[str, ...], edges: list[tuple[str, str]]
    ) -> "AdjacencyGraph":
        """Symmetric closure of an edge list over a fixed region universe."""
        index = {rid: i for i, rid in enumerate(region_ids)}
        sets: list[set[int]] = [set() for _ in region_ids]
        for a, b in edges:
            if a not in index or b not in index:
                unknown = a if a not in index else b
                raise DataError(f"adjacency edge references unknown region {unknown!r}")
            if a == b:
                raise DataError(f"self-loop adjacency row for region {a!r}")
            sets[index[a]].add(index[b])
            sets[index[b]].add(index[a])
        return cls(
            region_ids=tuple(region_ids),
            neighbors=tuple(frozenset(s) for s in sets),
        )

    def index_of(self, region_id: str) -> int:
        try:
            return self.region_ids.index(region_id)
        except ValueError:
            raise DataError(f"region {region_id!r} not covered by adjacency graph") from None

    def neighbor_ids(self, region_id: str) -> list[str]:
        i = self.index_of(region_id)
        return sorted(self.region_ids[j] for j in self.neighbors[i])

    def edge_count(self) -> int:
        return sum(len(s) for s in self.neighbors) // 2


@dataclass(frozen=True)
class ImputationEntry:
    region_id: str
    short_form: str
    value: float
    source: str


@dataclass(frozen=True)
class ImputationLog:
    entries: tuple[ImputationEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)


# --- polygon handling ------------------------------------------------------


def _rings_of(geometry: dict, region_id: str) -> list[list[tuple[float, float]]]:
    gtype = geometry.get("type")
    if gtype == "Polygon":
        polys = [geometry.get("coordinates", [])]
    elif gtype == "MultiPolygon":
        polys = geometry.get("coordinates", [])
    else:
        raise GeometryError(
            f"feature {region_id!r}: unsupported geometry type {gtype!r}"
        )
    rings: list[list[tuple[float, float]]] = []
    for poly in polys:
        for ring in poly:
            pts = [(float(p[0]), float(p[1])) for p in ring]
            if len(pts) < 4:
                raise GeometryError(
                    f"feature {region_id!r}: ring has {len(pts)} positions, need >= 4"
                )
            if pts[0] != pts[-1]:
                raise GeometryError(f"feature {region_id!r}: unclosed ring")
            rings.append(pts)
    if not rings:
        raise GeometryError(f"feature {region_id!r}: geometry has no rings")
    return rings


def _cross(o: tuple[float, float], a: tuple[float, float], b: tuple[float, float]) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _on_segment(p: tuple[float, float], q: tuple[float, float], r: tuple[float, float]) -> bool:
    """True when collinear point r lies within the bounding box of segment pq."""
    return (
        min(p[0], q[0]) <= r[0] <= max(p[0], q[0])
        and min(p[1], q[1]) <= r[1] <= max(p[1], q[1])
    )


def _segments_touch(p1, q1, p2, q2) -> bool:
    """Exact segment intersection test, including touches and overlaps."""
    d1 = _cross(p2, q2, p1)
    d2 = _cross(p2, q2, q1)
    d3 = _cross(p1, q1, p2)
    d4 = _cross(p1, q1, q2)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True
    if d1 == 0 and _on_segment(p2, q2, p1):
        return True
    if d2 == 0 and _on_segment(p2, q2, q1):
        return True
    if d3 == 0 and _on_segment(p1, q1, p2):
        return True
    if d4 == 0 and _on_segment(p1, q1, q2):
        return True
    return False


def _point_segment_dist2(r, p, q) -> float:
    vx, vy = q[0] - p[0], q[1] - p[1]
    wx, wy = r[0] - p[0], r[1] - p[1]
    seg2 = vx * vx + vy * vy
    if seg2 == 0.0:
        return wx * wx + wy * wy
    t = max(0.0, min(1.0, (wx * vx + wy * vy) / seg2))
    dx, dy = wx - t * vx, wy - t * vy
    return dx * dx + dy * dy


def _segments_within(p1, q1, p2, q2, tol: float) -> bool:
    if _segments_touch(p1, q1, p2, q2):
        return True
    if tol <= 0.0:
        return False
    tol2 = tol * tol
    return (
        _point_segment_dist2(p1, p2, q2) <= tol2
        or _point_segment_dist2(q1, p2, q2) <= tol2
        or _point_segment_dist2(p2, p1, q1) <= tol2
        or _point_segment_dist2(q2, p1, q1) <= tol2
    )


class _RegionOutline:
    __slots__ = ("vertices", "segments", "bbox")

    def __init__(self, rings: list[list[tuple[float, float]]]) -> None:
        self.vertices: set[tuple[float, float]] = set()
        self.segments: list[tuple[tuple[float, float], tuple[float, float]]] = []
        xs: list[float] = []
        ys: list[float] = []
        for ring in rings:
            for pt in ring[:-1]:
                self.vertices.add(pt)
                xs.append(pt[0])
                ys.append(pt[1])
            for a, b in zip(ring[:-1], ring[1:]):
                self.segments.append((a, b))
        self.bbox = (min(xs), min(ys), max(xs), max(ys))


def _bbox_overlap(a, b, tol: float) -> bool:
    return not (
        a[2] + tol < b[0] or b[2] + tol < a[0] or a[3] + tol < b[1] or b[3] + tol < a[1]
    )


def _outlines_touch(a: _RegionOutline, b: _RegionOutline, tol: float) -> bool:
    if tol <= 0.0:
        if a.vertices & b.vertices:
            return True
    else:
        tol2 = tol * tol
        for va in a.vertices:
            for vb in b.vertices:
                dx, dy = va[0] - vb[0], va[1] - vb[1]
                if dx * dx + dy * dy <= tol2:
                    return True
    for p1, q1 in a.segments:
        sx0, sx1 = min(p1[0], q1[0]) - tol, max(p1[0], q1[0]) + tol
        sy0, sy1 = min(p1[1], q1[1]) - tol, max(p1[1], q1[1]) + tol
        if sx1 < b.bbox[0] or sx0 > b.bbox[2] or sy1 < b.bbox[1] or sy0 > b.bbox[3]:
            continue
        for p2, q2 in b.segments:
            if max(p2[0], q2[0]) < sx0 or min(p2[0], q2[0]) > sx1:
                continue
            if max(p2[1], q2[1]) < sy0 or min(p2[1], q2[1]) > sy1:
                continue
            if _segments_within(p1, q1, p2, q2, tol):
                return True
    return False


def build_adjacency_from_polygons(
    boundaries_path: str | Path, snap_tolerance: float = 0.0
) -> AdjacencyGraph:
    """Queen-contiguity graph from a GeoJSON FeatureCollection.

    Every feature must carry a ``region_id`` property and a Polygon or
    MultiPolygon geometry with closed rings.
    """
    with open(boundaries_path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("type") != "FeatureCollection":
        raise GeometryError("boundaries file is not a GeoJSON FeatureCollection")
    region_ids: list[str] = []
    outlines: list[_RegionOutline] = []
    for feature in doc.get("features", []):
        props = feature.get("properties") or {}
        region_id = props.get("region_id")
        if region_id is None:
            raise GeometryError("boundary feature lacks a region_id property")
        region_id = str(region_id)
        if region_id in region_ids:
            raise GeometryError(f"duplicate region_id {region_id!r} in boundaries")
        region_ids.append(region_id)
        outlines.append(_RegionOutline(_rings_of(feature.get("geometry") or {}, region_id)))

    n = len(region_ids)
    sets: list[set[int]] = [set() for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if not _bbox_overlap(outlines[i].bbox, outlines[j].bbox, snap_tolerance):
                continue
            if _outlines_touch(outlines[i], outlines[j], snap_tolerance):
                sets[i].add(j)
                sets[j].add(i)
    return AdjacencyGraph(
        region_ids=tuple(region_ids),
        neighbors=tuple(frozenset(s) for s in sets),
    )


def load_adjacency_list(
    path: str | Path, region_ids: list[str] | tuple[str, ...]
) -> AdjacencyGraph:
    """Adjacency graph from CSV rows ``region_id,neighbor_id``.

    The graph is the symmetric closure of the listed pairs over the given
    region universe; an empty file yields a graph with no edges.
    """
    edges: list[tuple[str, str]] = []
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if rows:
        start = 1 if rows[0] == ["region_id", "neighbor_id"] else 0
        for row in rows[start:]:
            if len(row) != 2:
                raise DataError(f"adjacency file {path}: row {row!r} is not a pair")
            edges.append((row[0].strip(), row[1].strip()))
    return AdjacencyGraph.from_edges(list(region_ids), edges)


def empty_graph(region_ids: list[str] | tuple[str, ...]) -> AdjacencyGraph:
    return AdjacencyGraph.from_edges(list(region_ids), [])


# --- imputation -------------------------------------------------------------


def impute_neighbor_mean(d: Dataset, g: AdjacencyGraph) -> tuple[Dataset, ImputationLog]:
    """Fill every missing cell from neighbors observed in the original data.

    A single pass: neighbor means never see freshly imputed values, so the
    result is independent of region order. Cells with no observed neighbor
    fall back to the national column mean. A variable with no observed
    value anywhere is unresolvable.
    """
    graph_index = {rid: i for i, rid in enumerate(g.region_ids)}
    for region in d.regions:
        if region.region_id not in graph_index:
            raise DataError(
                f"region {region.region_id!r} not covered by the adjacency graph"
            )
    # graph position -> dataset row, for graphs that cover a superset
    row_of_graph = {graph_index[rid]: i for i, rid in enumerate(d.region_ids)}

    values = d.values.copy()
    observed = ~np.isnan(d.values)
    entries: list[ImputationEntry] = []
    col_means: list[float | None] = []
    for j, var in enumerate(d.variables):
        obs = observed[:, j]
        if not obs.any():
            raise DegenerateColumnError(
                f"variable {var.short_form!r} has no observed value; cannot impute"
            )
        col_means.append(float(d.values[obs, j].mean()))

    for i, region in enumerate(d.regions):
        gi = graph_index[region.region_id]
        neighbor_rows = [
            row_of_graph[k] for k in sorted(g.neighbors[gi]) if k in row_of_graph
        ]
        for j, var in enumerate(d.variables):
            if observed[i, j]:
                continue
            obs_vals = [d.values[r, j] for r in neighbor_rows if observed[r, j]]
            if obs_vals:
                value = float(np.mean(obs_vals))
                source = SOURCE_NEIGHBOR_MEAN
            else:
                value = col_means[j]
                source = SOURCE_COLUMN_MEAN
            values[i, j] = value
            entries.append(
                ImputationEntry(
                    region_id=region.region_id,
                    short_form=var.short_form,
                    value=value,
                    source=source,
                )
            )

    filled = Dataset(regions=list(d.regions), variables=list(d.variables), values=values)
    return filled, ImputationLog(entries=tuple(entries))


def save_imputation_log(log: ImputationLog, path: str | Path) -> None:
    lines = ["region_id,short_form,value,source"]
    for e in log.entries:
        lines.append(f"{e.region_id},{e.short_form},{repr(e.value)},{e.source}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
