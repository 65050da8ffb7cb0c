"""Shared builders for datasets, score fixtures, and planted-structure data."""

from __future__ import annotations

import numpy as np
import pytest

from viclust import Dataset, IndexScores, RegionRecord, VariableMeta
from viclust.spatial import AdjacencyGraph


def make_regions(n: int, states=None, remoteness=None, spatial=None) -> list[RegionRecord]:
    records = []
    for i in range(n):
        records.append(
            RegionRecord(
                region_id=f"R{i + 1:03d}",
                name=f"Region {i + 1}",
                state=states[i] if states else "NSW",
                remoteness=remoteness[i] if remoteness else (i % 5) + 1,
                is_spatial=spatial[i] if spatial else True,
            )
        )
    return records


def make_dataset(values, short_forms=None, regions=None) -> Dataset:
    values = np.asarray(values, dtype=float)
    n, p = values.shape
    if short_forms is None:
        short_forms = [f"V{j + 1:02d}" for j in range(p)]
    if regions is None:
        regions = make_regions(n)
    variables = [VariableMeta(s, s) for s in short_forms]
    return Dataset(regions=regions, variables=variables, values=values)


def make_scores(points) -> IndexScores:
    points = np.asarray(points, dtype=float)
    ids = tuple(f"R{i + 1:03d}" for i in range(points.shape[0]))
    return IndexScores(region_ids=ids, scores=points)


def chain_graph(region_ids) -> AdjacencyGraph:
    edges = [(region_ids[i], region_ids[i + 1]) for i in range(len(region_ids) - 1)]
    return AdjacencyGraph.from_edges(list(region_ids), edges)


def simplex_blobs(
    per_blob: int = 20, scale: float = 30.0, noise: float = 1.0, seed: int = 5, dims: int = 5
) -> tuple[np.ndarray, np.ndarray]:
    """Four blobs at regular-simplex vertices: only k=4 has real curvature.

    Returns (points, true_labels); the simplex sits in the first three of
    `dims` coordinates so the fixture looks like five retained indices.
    """
    vertices = np.array(
        [
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ]
    ) * (scale / np.sqrt(8.0))  # pairwise distance == scale
    rng = np.random.default_rng(seed)
    points = np.zeros((4 * per_blob, dims))
    labels = np.repeat(np.arange(4), per_blob)
    for b in range(4):
        rows = slice(b * per_blob, (b + 1) * per_blob)
        points[rows, :3] = vertices[b]
    points += noise * rng.standard_normal(points.shape)
    return points, labels


@pytest.fixture(scope="session")
def selection_fixture():
    """41-variable table engineered so the screens shed exactly 15 variables.

    26 near-normal keepers (first one a positive population column), 10
    near-duplicates that trip the correlation prune, and 5 spike columns
    whose skewness survives the log transform.
    """
    rng = np.random.default_rng(20240501)
    n = 240
    factors = rng.standard_normal((n, 3))
    mix = rng.uniform(-0.5, 0.5, size=(3, 26))
    keepers = factors @ mix + rng.standard_normal((n, 26))
    keepers[:, 0] = np.abs(keepers[:, 0]) * 300.0 + 500.0  # the population column

    clones = keepers[:, :10] + 0.25 * keepers[:, :10].std(axis=0) * rng.standard_normal((n, 10))

    spikes = np.zeros((n, 5))
    for j in range(5):
        rows = rng.choice(n, size=6, replace=False)
        spikes[rows, j] = rng.uniform(1e4, 1e5, size=6)

    values = np.hstack([keepers, clones, spikes])
    names = (
        ["ERP"]
        + [f"K{j:02d}" for j in range(2, 27)]
        + [f"D{j:02d}" for j in range(1, 11)]
        + [f"S{j}" for j in range(1, 6)]
    )
    order = rng.permutation(41)
    dataset = make_dataset(values[:, order], [names[j] for j in order])
    graph = chain_graph(dataset.region_ids)
    keeper_names = {names[j] for j in range(26)}
    return dataset, graph, keeper_names
