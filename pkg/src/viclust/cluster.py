"""K-means over the vulnerability indices, elbow scan, and seed stability.

Lloyd iterations with best-of-restarts selection. Restart r of seed s
draws its initial centroids from the xoshiro256** stream keyed by
(s, r) — see viclust.rng — so a (scores, k, seed, init, restarts) tuple
always reproduces the same model, bit for bit, regardless of how many
worker threads evaluate the restarts.

Stability across seeds is measured with the Hubert-Arabie adjusted Rand
index; pairs below the 0.65 cutoff are flagged as seed-sensitive.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Sequence

import numpy as np

from .errors import DataError
from .pca import IndexScores
from .rng import Xoshiro256StarStar, derive_stream_key

INIT_FORGY = "forgy"
INIT_KMEANSPP = "kmeanspp"

STABILITY_CUTOFF = 0.65
DEFAULT_SEEDS = (123, 1767, 7462, 944, 3401)


@dataclass(frozen=True)
class ClusterModel:
    k: int
    assignments: np.ndarray  # labels 1..k, aligned with the score rows
    centroids: np.ndarray  # k x d
    wcss: float
    iterations: int
    seed: int
    init: str
    restarts: int
    wcss_trace: tuple[float, ...]

    def sizes(self) -> list[int]:
        return [int((self.assignments == c).sum()) for c in range(1, self.k + 1)]


@dataclass(frozen=True)
class ElbowScan:
    k_values: tuple[int, ...]
    wcss_per_k: tuple[float, ...]
    suggested_k: int | None


@dataclass(frozen=True)
class StabilityReport:
    seeds: tuple[int, ...]
    ari: np.ndarray  # symmetric, unit diagonal
    flagged_pairs: tuple[tuple[int, int, float], ...]
    cutoff: float = STABILITY_CUTOFF


def _as_points(s: IndexScores | np.ndarray) -> np.ndarray:
    pts = s.scores if isinstance(s, IndexScores) else np.asarray(s, dtype=float)
    pts = np.asarray(pts, dtype=float)
    if pts.ndim != 2:
        raise DataError("scores must be a 2-D matrix")
    if not np.isfinite(pts).all():
        raise DataError("scores contain non-finite values")
    return pts


def _init_forgy(points: np.ndarray, k: int, rng: Xoshiro256StarStar) -> np.ndarray:
    idx = rng.sample_indices(points.shape[0], k)
    return points[idx].copy()


def _init_kmeanspp(points: np.ndarray, k: int, rng: Xoshiro256StarStar) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    first = rng.randbelow(n)
    centroids[0] = points[first]
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = float(d2.sum())
        if total == 0.0:
            pick = rng.randbelow(n)
        else:
            u = rng.random() * total
            cum = np.cumsum(d2)
            pick = int(np.searchsorted(cum, u, side="right"))
            pick = min(pick, n - 1)
        centroids[c] = points[pick]
        d2 = np.minimum(d2, ((points - centroids[c]) ** 2).sum(axis=1))
    return centroids


def _assign(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest centroid per point (ties to the lowest label) and distances."""
    d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)  # argmin takes the first minimum: lowest label
    return labels, d2


def _repair_empty(
    points: np.ndarray, labels: np.ndarray, centroids: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Seize the point farthest from its centroid for each empty cluster."""
    k = centroids.shape[0]
    counts = np.bincount(labels, minlength=k)
    for empty in np.nonzero(counts == 0)[0]:
        dist = ((points - centroids[labels]) ** 2).sum(axis=1)
        donors = counts[labels] >= 2
        if not donors.any():
            break
        dist[~donors] = -1.0
        victim = int(np.argmax(dist))
        old = labels[victim]
        labels[victim] = empty
        counts[old] -= 1
        counts[empty] += 1
        centroids[empty] = points[victim]
        members = labels == old
        centroids[old] = points[members].mean(axis=0)
    return labels, centroids


def _lloyd(
    points: np.ndarray,
    centroids: np.ndarray,
    max_iter: int,
    tol: float,
) -> tuple[np.ndarray, np.ndarray, float, int, tuple[float, ...]]:
    """One Lloyd run from given centroids; returns labels (0-based), centroids,
    wcss, iteration count, and the per-iteration wcss trace."""
    k = centroids.shape[0]
    centroids = centroids.copy()
    prev_labels: np.ndarray | None = None
    trace: list[float] = []
    iterations = 0
    for _ in range(max_iter):
        labels, d2 = _assign(points, centroids)
        trace.append(float(d2[np.arange(points.shape[0]), labels].sum()))
        iterations += 1
        if prev_labels is not None and np.array_equal(labels, prev_labels):
            break
        old_centroids = centroids.copy()
        for c in range(k):
            members = labels == c
            if members.any():
                centroids[c] = points[members].mean(axis=0)
        labels, centroids = _repair_empty(points, labels, centroids)
        prev_labels = labels
        movement = float(np.sqrt(((centroids - old_centroids) ** 2).sum(axis=1)).max())
        if movement < tol:
            break
    # final consistency: centroids are the means of their members, and the
    # reported wcss is recomputed against them
    labels = prev_labels if prev_labels is not None else labels
    for c in range(k):
        members = labels == c
        if members.any():
            centroids[c] = points[members].mean(axis=0)
    wcss = float(((points - centroids[labels]) ** 2).sum())
    return labels, centroids, wcss, iterations, tuple(trace)


def _canonical_renumber(
    labels: np.ndarray, centroids: np.ndarray, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """Renumber clusters by descending size, ties by first member index."""
    sizes = np.bincount(labels, minlength=k)
    first_member = np.full(k, labels.size)
    for i, lab in enumerate(labels):
        if first_member[lab] == labels.size:
            first_member[lab] = i
    order = sorted(range(k), key=lambda c: (-sizes[c], first_member[c]))
    relabel = np.empty(k, dtype=int)
    for new, old in enumerate(order):
        relabel[old] = new
    return relabel[labels] + 1, centroids[order].copy()


def kmeans(
    s: IndexScores | np.ndarray,
    k: int,
    seed: int,
    init: str = INIT_FORGY,
    restarts: int = 25,
    max_iter: int = 200,
    tol: float = 1e-9,
    threads: int = 1,
) -> ClusterModel:
    """Best-of-restarts Lloyd K-means with canonical cluster numbering.

    The winner is the restart with the lowest wcss, ties resolved by
    restart index, so concurrent evaluation cannot change the result.
    """
    points = _as_points(s)
    n = points.shape[0]
    if k <= 0:
        raise DataError(f"k must be positive, got {k}")
    if k > n:
        raise DataError(f"k ({k}) exceeds the number of regions ({n})")
    if restarts < 1:
        raise DataError("restarts must be >= 1")
    if init not in (INIT_FORGY, INIT_KMEANSPP):
        raise DataError(f"unknown init {init!r}")

    def one_restart(r: int):
        rng = Xoshiro256StarStar(derive_stream_key(seed, r))
        if init == INIT_FORGY:
            start = _init_forgy(points, k, rng)
        else:
            start = _init_kmeanspp(points, k, rng)
        return _lloyd(points, start, max_iter, tol)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one_restart, range(restarts)))
    else:
        results = [one_restart(r) for r in range(restarts)]

    best_r = min(range(restarts), key=lambda r: (results[r][2], r))
    labels, centroids, wcss, iterations, trace = results[best_r]
    labels, centroids = _canonical_renumber(labels, centroids, k)
    return ClusterModel(
        k=k,
        assignments=labels,
        centroids=centroids,
        wcss=wcss,
        iterations=iterations,
        seed=seed,
        init=init,
        restarts=restarts,
        wcss_trace=trace,
    )


def elbow_scan(
    s: IndexScores | np.ndarray,
    k_max: int,
    seed: int,
    init: str = INIT_FORGY,
    restarts: int = 25,
    threads: int = 1,
) -> ElbowScan:
    """wcss for k = 1..k_max plus the largest-second-difference suggestion.

    The suggestion is advisory; the curve itself is the deliverable for
    human inspection. No suggestion exists for k_max = 2 (no interior k).
    """
    if k_max < 2:
        raise DataError("elbow scan needs k_max >= 2")
    wcss = [
        kmeans(s, k, seed, init=init, restarts=restarts, threads=threads).wcss
        for k in range(1, k_max + 1)
    ]
    suggested: int | None = None
    if k_max >= 3:
        best = -np.inf
        for k in range(2, k_max):
            curvature = wcss[k - 2] - 2.0 * wcss[k - 1] + wcss[k]
            if curvature > best:
                best = curvature
                suggested = k
    return ElbowScan(
        k_values=tuple(range(1, k_max + 1)),
        wcss_per_k=tuple(wcss),
        suggested_k=suggested,
    )


def adjusted_rand_index(a: Sequence | np.ndarray, b: Sequence | np.ndarray) -> float:
    """Hubert-Arabie adjusted Rand index between two labelings.

    Computed in exact rational arithmetic from the contingency table, so
    identical partitions return exactly 1.0. When chance agreement equals
    maximal agreement (both partitions trivial and equal) the index is
    defined as 1.
    """
    a = list(a)
    b = list(b)
    if len(a) != len(b):
        raise DataError(f"labelings differ in length: {len(a)} vs {len(b)}")
    n = len(a)
    if n < 2:
        raise DataError("adjusted Rand index needs at least 2 items")
    counts: dict[tuple, int] = {}
    counts_a: dict = {}
    counts_b: dict = {}
    for la, lb in zip(a, b):
        counts[(la, lb)] = counts.get((la, lb), 0) + 1
        counts_a[la] = counts_a.get(la, 0) + 1
        counts_b[lb] = counts_b.get(lb, 0) + 1
    sum_ij = sum(comb(c, 2) for c in counts.values())
    sum_a = sum(comb(c, 2) for c in counts_a.values())
    sum_b = sum(comb(c, 2) for c in counts_b.values())
    expected = Fraction(sum_a * sum_b, comb(n, 2))
    denominator = Fraction(sum_a + sum_b, 2) - expected
    if denominator == 0:
        return 1.0
    return float((sum_ij - expected) / denominator)


def stability_analysis(
    s: IndexScores | np.ndarray,
    k: int,
    seeds: Sequence[int] = DEFAULT_SEEDS,
    init: str = INIT_FORGY,
    restarts: int = 25,
    threads: int = 1,
    cutoff: float = STABILITY_CUTOFF,
) -> StabilityReport:
    """Pairwise ARI between K-means runs differing only in seed."""
    seeds = tuple(int(x) for x in seeds)
    if len(seeds) < 2:
        raise DataError("stability analysis needs at least 2 seeds")
    if len(set(seeds)) != len(seeds):
        raise DataError("stability seeds must be distinct")
    models = [
        kmeans(s, k, seed, init=init, restarts=restarts, threads=threads)
        for seed in seeds
    ]
    m = len(seeds)
    ari = np.eye(m)
    flagged: list[tuple[int, int, float]] = []
    for i in range(m):
        for j in range(i + 1, m):
            value = adjusted_rand_index(models[i].assignments, models[j].assignments)
            ari[i, j] = ari[j, i] = value
            if value < cutoff:
                flagged.append((seeds[i], seeds[j], value))
    return StabilityReport(
        seeds=seeds,
        ari=ari,
        flagged_pairs=tuple(flagged),
        cutoff=cutoff,
    )
