"""Correlation-matrix principal components and vulnerability-index scoring.

The pipeline standardizes the selected variables (divisor n - 1), then
eigendecomposes their correlation matrix with a cyclic Jacobi sweep. The
trace of a correlation matrix equals the variable count, so eigenvalues
sum to p and the variance fraction of component j is eigenvalue_j / p.
Retained component scores are the vulnerability indices.

Determinism: eigenpairs are sorted by descending eigenvalue with ties
broken on the first nonzero loading entry, and each loading column is
flipped so its largest-magnitude entry is positive. Two fits of identical
input produce bit-identical models.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConvergenceError, DataError, DegenerateColumnError
from .ingest import Dataset
from .select import compute_skewness

RETENTION_KAISER = "kaiser"
RETENTION_FIRST_ONLY = "first_only"
RETENTION_CUMULATIVE = "cumulative"

BAND_LOW = "low"
BAND_MEDIUM = "medium"
BAND_HIGH = "high"


@dataclass(frozen=True)
class PcaModel:
    variable_order: tuple[str, ...]
    means: np.ndarray
    sds: np.ndarray
    loadings: np.ndarray  # p x p, columns are components
    eigenvalues: np.ndarray  # descending
    variance_fraction: np.ndarray  # eigenvalue / p
    retained: int | None = None

    @property
    def p(self) -> int:
        return len(self.variable_order)

    def index_names(self) -> list[str]:
        k = self.retained if self.retained is not None else 0
        return [f"VI{j + 1}" for j in range(k)]


@dataclass(frozen=True)
class IndexScores:
    region_ids: tuple[str, ...]
    scores: np.ndarray  # n x k

    def __post_init__(self) -> None:
        if self.scores.ndim != 2 or self.scores.shape[0] != len(self.region_ids):
            raise DataError(
                f"score matrix {self.scores.shape} does not match "
                f"{len(self.region_ids)} regions"
            )

    @property
    def k(self) -> int:
        return self.scores.shape[1]

    def index_names(self) -> list[str]:
        return [f"VI{j + 1}" for j in range(self.k)]


def standardize(d: Dataset) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Column-wise z-scores with sd divisor n - 1; returns (Z, means, sds)."""
    if d.missing_mask().any():
        raise DataError("standardization requires a dataset with no missing cells")
    if d.n < 2:
        raise DataError("standardization needs at least 2 regions")
    x = d.values
    for j, var in enumerate(d.variables):
        if np.ptp(x[:, j]) == 0.0:
            raise DegenerateColumnError(
                f"variable {var.short_form!r} has zero variance"
            )
    means = x.mean(axis=0)
    sds = x.std(axis=0, ddof=1)
    return (x - means) / sds, means, sds


def jacobi_eigh(
    a: np.ndarray, rel_tol: float = 1e-12, max_sweeps: int = 100
) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps rotate every upper-triangle pair in turn until the off-diagonal
    Frobenius norm drops below rel_tol times the matrix norm. Returns
    (eigenvalues, eigenvectors) unsorted; columns of the second factor are
    the eigenvectors.
    """
    a = np.array(a, dtype=float)
    p = a.shape[0]
    if a.ndim != 2 or a.shape[1] != p:
        raise DataError("jacobi_eigh expects a square matrix")
    v = np.eye(p)
    if p == 1:
        return np.array([a[0, 0]]), v
    norm = float(np.linalg.norm(a))
    if norm == 0.0:
        return np.zeros(p), v
    for _ in range(max_sweeps):
        off = a.copy()
        np.fill_diagonal(off, 0.0)
        if float(np.linalg.norm(off)) < rel_tol * norm:
            return np.diag(a).copy(), v
        for i in range(p - 1):
            for j in range(i + 1, p):
                apq = a[i, j]
                if apq == 0.0:
                    continue
                theta = (a[j, j] - a[i, i]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                row_i = c * a[i, :] - s * a[j, :]
                row_j = s * a[i, :] + c * a[j, :]
                a[i, :], a[j, :] = row_i, row_j
                col_i = c * a[:, i] - s * a[:, j]
                col_j = s * a[:, i] + c * a[:, j]
                a[:, i], a[:, j] = col_i, col_j
                a[i, j] = 0.0
                a[j, i] = 0.0
                vec_i = c * v[:, i] - s * v[:, j]
                vec_j = s * v[:, i] + c * v[:, j]
                v[:, i], v[:, j] = vec_i, vec_j
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    if float(np.linalg.norm(off)) < rel_tol * norm:
        return np.diag(a).copy(), v
    raise ConvergenceError(f"Jacobi sweep did not converge within {max_sweeps} sweeps")


def _first_nonzero(column: np.ndarray) -> int:
    nz = np.nonzero(column)[0]
    return int(nz[0]) if nz.size else len(column)


def fit_pca(
    z: np.ndarray,
    variable_order: tuple[str, ...] | list[str] | None = None,
    means: np.ndarray | None = None,
    sds: np.ndarray | None = None,
    max_sweeps: int = 100,
) -> PcaModel:
    """Fit components to an already-standardized matrix.

    When the caller standardized elsewhere, variable names default to
    x1..xp and the recorded means/sds to 0/1.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim != 2:
        raise DataError("fit_pca expects a 2-D matrix")
    n, p = z.shape
    if n < 2:
        raise DataError("fit_pca needs at least 2 rows")
    if variable_order is None:
        variable_order = tuple(f"x{j + 1}" for j in range(p))
    if len(variable_order) != p:
        raise DataError("variable_order length does not match column count")
    if means is None:
        means = np.zeros(p)
    if sds is None:
        sds = np.ones(p)

    r = z.T @ z / (n - 1)
    r = (r + r.T) / 2.0
    lam, w = jacobi_eigh(r, max_sweeps=max_sweeps)

    if (lam < -1e-10).any():
        raise DataError(
            f"correlation matrix is not positive semidefinite (min eigenvalue {lam.min():.3e})"
        )
    lam = np.where(lam < 0.0, 0.0, lam)

    order = sorted(range(p), key=lambda j: (-lam[j], _first_nonzero(w[:, j])))
    lam = lam[order]
    w = w[:, order]
    for j in range(p):
        anchor = int(np.argmax(np.abs(w[:, j])))
        if w[anchor, j] < 0.0:
            w[:, j] = -w[:, j]

    return PcaModel(
        variable_order=tuple(variable_order),
        means=np.asarray(means, dtype=float).copy(),
        sds=np.asarray(sds, dtype=float).copy(),
        loadings=w,
        eigenvalues=lam,
        variance_fraction=lam / p,
        retained=None,
    )


def fit_correlation_pca(d: Dataset, max_sweeps: int = 100) -> tuple[PcaModel, np.ndarray]:
    """Standardize a dataset and fit; returns (model, standardized matrix)."""
    z, means, sds = standardize(d)
    model = fit_pca(z, tuple(d.short_forms), means, sds, max_sweeps=max_sweeps)
    return model, z


def retained_count(
    eigenvalues: np.ndarray | list[float],
    strategy: str = RETENTION_KAISER,
    threshold: float = 1.0,
) -> int:
    """Number of components a retention strategy keeps.

    kaiser: eigenvalues >= threshold (inclusive). first_only: always 1.
    cumulative: smallest k whose eigenvalue sum reaches threshold * p,
    i.e. cumulative variance fraction of at least threshold.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    p = lam.size
    if p == 0:
        raise DataError("no eigenvalues to retain from")
    if strategy == RETENTION_KAISER:
        return int((lam >= threshold).sum())
    if strategy == RETENTION_FIRST_ONLY:
        return 1
    if strategy == RETENTION_CUMULATIVE:
        fractions = np.cumsum(lam) / p
        hits = np.nonzero(fractions >= threshold)[0]
        return int(hits[0]) + 1 if hits.size else p
    raise DataError(f"unknown retention strategy {strategy!r}")


def retain_components(
    m: PcaModel, strategy: str = RETENTION_KAISER, threshold: float = 1.0
) -> PcaModel:
    k = retained_count(m.eigenvalues, strategy, threshold)
    if k == 0:
        raise DataError(
            f"retention ({strategy}, threshold {threshold}) keeps no component; "
            f"largest eigenvalue is {float(m.eigenvalues[0]):.6g}"
        )
    return replace(m, retained=k)


def score(
    m: PcaModel, z: np.ndarray, region_ids: list[str] | tuple[str, ...]
) -> IndexScores:
    """Project standardized rows onto the retained components."""
    if m.retained is None:
        raise DataError("model has no retained-component count; run retention first")
    z = np.asarray(z, dtype=float)
    if z.ndim != 2 or z.shape[1] != m.p:
        raise DataError(
            f"standardized matrix has {z.shape} columns, model expects {m.p}"
        )
    if len(region_ids) != z.shape[0]:
        raise DataError("region_ids length does not match matrix rows")
    return IndexScores(
        region_ids=tuple(region_ids),
        scores=z @ m.loadings[:, : m.retained],
    )


def substantive_loadings(
    m: PcaModel, threshold: float = 0.20
) -> list[list[tuple[str, float, int]]]:
    """Per retained component: (variable, weight, sign) with |weight| >= threshold.

    Entries are ordered by descending |weight|; equal magnitudes fall back
    to the variable order.
    """
    if m.retained is None:
        raise DataError("model has no retained-component count; run retention first")
    out: list[list[tuple[str, float, int]]] = []
    for j in range(m.retained):
        col = m.loadings[:, j]
        picks = [
            (m.variable_order[i], float(col[i]), 1 if col[i] >= 0 else -1)
            for i in range(m.p)
            if abs(col[i]) >= threshold
        ]
        picks.sort(key=lambda t: (-abs(t[1]), m.variable_order.index(t[0])))
        out.append(picks)
    return out


def skewness_band(g1: float) -> tuple[str, bool]:
    """Banding for an index skewness value: (band, acceptable).

    Bands: |g1| <= 1 low, 1 < |g1| <= 2 medium, above 2 high. Acceptable
    means strictly |g1| < 2.
    """
    a = abs(g1)
    if a <= 1.0:
        band = BAND_LOW
    elif a <= 2.0:
        band = BAND_MEDIUM
    else:
        band = BAND_HIGH
    return band, a < 2.0


@dataclass(frozen=True)
class IndexSkewness:
    index: str
    skewness: float
    band: str
    acceptable: bool


def index_skewness_report(s: IndexScores) -> list[IndexSkewness]:
    """Skewness of every index column, with acceptability banding."""
    rows = []
    for j, name in enumerate(s.index_names()):
        g1 = compute_skewness(s.scores[:, j])
        band, ok = skewness_band(g1)
        rows.append(IndexSkewness(index=name, skewness=g1, band=band, acceptable=ok))
    return rows
