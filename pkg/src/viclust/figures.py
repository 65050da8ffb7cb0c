"""Render diagnostic figures from a completed run's delimited outputs.

Everything here reads the files a run wrote (never live pipeline state),
so reports can be regenerated at any time without touching results.
PNGs are written without an embedded date so repeated renders of the
same outputs are byte-identical. Choropleth mapping stays out of scope;
the atlas GeoJSON is the hand-off point for mapping tools.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .pipeline import (
    F_CROSSTAB_REMOTENESS,
    F_ELBOW,
    F_INDEX_SKEWNESS,
    F_SCORES,
    F_STABILITY,
    suggested_k_from_elbow_csv,
)
from .profiles import read_scores_csv

_SAVE_KWARGS = {"metadata": {"Date": None}}


def _save(fig, path: Path, dpi: int) -> Path:
    fig.savefig(path, dpi=dpi, **_SAVE_KWARGS)
    plt.close(fig)
    return path


def _render_elbow(out: Path, fig_dir: Path, dpi: int) -> Path | None:
    src = out / F_ELBOW
    if not src.exists():
        return None
    lines = [ln for ln in src.read_text(encoding="utf-8").split("\n") if ln]
    ks = [int(ln.split(",")[0]) for ln in lines[1:]]
    wcss = [float(ln.split(",")[1]) for ln in lines[1:]]
    suggested = suggested_k_from_elbow_csv(src)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ks, wcss, marker="o", color="#1f5fa8")
    if suggested is not None:
        ax.axvline(suggested, color="#c44e52", linestyle="--",
                   label=f"suggested k = {suggested}")
        ax.legend()
    ax.set_xlabel("number of clusters k")
    ax.set_ylabel("within-cluster sum of squares")
    ax.set_title("Elbow scan")
    ax.set_xticks(ks)
    fig.tight_layout()
    return _save(fig, fig_dir / "elbow.png", dpi)


def _render_index_histograms(out: Path, fig_dir: Path, dpi: int) -> Path | None:
    src = out / F_SCORES
    if not src.exists():
        return None
    scores = read_scores_csv(src)
    skew_by_index: dict[str, float] = {}
    skew_path = out / F_INDEX_SKEWNESS
    if skew_path.exists():
        with open(skew_path, encoding="utf-8") as fh:
            for row in json.load(fh)["indices"]:
                skew_by_index[row["index"]] = row["skewness"]
    k = scores.k
    ncols = min(k, 3)
    nrows = (k + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(4 * ncols, 3 * nrows), squeeze=False)
    for j, name in enumerate(scores.index_names()):
        ax = axes[j // ncols][j % ncols]
        ax.hist(scores.scores[:, j], bins=30, color="#4c72b0", edgecolor="white")
        title = name
        if name in skew_by_index:
            title += f"  (g1 = {skew_by_index[name]:.2f})"
        ax.set_title(title)
    for j in range(k, nrows * ncols):
        axes[j // ncols][j % ncols].axis("off")
    fig.suptitle("Vulnerability index distributions")
    fig.tight_layout()
    return _save(fig, fig_dir / "index_histograms.png", dpi)


def _render_stability(out: Path, fig_dir: Path, dpi: int) -> Path | None:
    src = out / F_STABILITY
    if not src.exists():
        return None
    with open(src, encoding="utf-8") as fh:
        doc = json.load(fh)
    seeds = doc["seeds"]
    ari = np.array(doc["ari"], dtype=float)
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    im = ax.imshow(ari, vmin=-0.5, vmax=1.0, cmap="RdYlGn")
    ax.set_xticks(range(len(seeds)), [str(s) for s in seeds])
    ax.set_yticks(range(len(seeds)), [str(s) for s in seeds])
    for i in range(len(seeds)):
        for j in range(len(seeds)):
            ax.text(j, i, f"{ari[i, j]:.2f}", ha="center", va="center", fontsize=8)
    fig.colorbar(im, ax=ax, label="adjusted Rand index")
    ax.set_title(f"Seed stability (cutoff {doc['cutoff']})")
    fig.tight_layout()
    return _save(fig, fig_dir / "stability_ari.png", dpi)


def _render_crosstab(out: Path, fig_dir: Path, dpi: int) -> Path | None:
    src = out / F_CROSSTAB_REMOTENESS
    if not src.exists():
        return None
    lines = [ln for ln in src.read_text(encoding="utf-8").split("\n") if ln]
    header = lines[0].split(",")
    clusters = header[1:-1]
    rows = [ln.split(",") for ln in lines[1:] if not ln.startswith("total,")]
    labels = [r[0] for r in rows]
    counts = np.array([[int(x) for x in r[1:-1]] for r in rows])
    fig, ax = plt.subplots(figsize=(6, 4))
    bottom = np.zeros(len(labels))
    for j, cluster in enumerate(clusters):
        ax.bar(labels, counts[:, j], bottom=bottom, label=cluster)
        bottom += counts[:, j]
    ax.set_xlabel("remoteness")
    ax.set_ylabel("regions")
    ax.set_title("Cluster composition by remoteness")
    ax.legend()
    fig.tight_layout()
    return _save(fig, fig_dir / "crosstab_remoteness.png", dpi)


def render_report(output_dir: str | Path, dpi: int = 150) -> list[Path]:
    """Render every figure whose source file exists; returns written paths."""
    out = Path(output_dir)
    fig_dir = out / "figures"
    fig_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for renderer in (_render_elbow, _render_index_histograms, _render_stability,
                     _render_crosstab):
        path = renderer(out, fig_dir, dpi)
        if path is not None:
            written.append(path)
    return written
