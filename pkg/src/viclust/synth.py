"""Synthetic demo inputs: a grid of regions with planted cluster structure.

Regions tile a rectangular grid of unit squares, so the GeoJSON
boundaries, the queen adjacency list, and the values table are mutually
consistent. Four latent groups with distinct factor profiles drive the
indicator columns, which gives the elbow scan something real to find.
The table also plants the data problems the pipeline is built to handle:
missing cells, a zero-population region, non-spatial rows, one variable
that needs a log transform, one beyond saving, and one near-duplicate.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .ingest import STATE_CODES

_GROUP_PROFILES = np.array(
    [
        [2.5, 0.0, 0.0],
        [-2.5, 0.0, 0.0],
        [0.0, 2.5, 0.0],
        [0.0, -2.5, 2.5],
    ]
)


def make_synthetic_inputs(
    out_dir: str | Path,
    n_regions: int = 120,
    seed: int = 7,
    missing_cells: int = 12,
) -> dict[str, Path]:
    """Write values/regions/variables CSVs, adjacency CSV, and boundaries GeoJSON.

    Returns the paths keyed by role. n_regions counts the spatial grid
    regions; two non-spatial rows and one zero-population region are added
    on top of it.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    cols = int(np.ceil(np.sqrt(n_regions)))
    cells = [(i // cols, i % cols) for i in range(n_regions)]
    region_ids = [f"R{i + 1:03d}" for i in range(n_regions)]

    groups = rng.integers(0, 4, size=n_regions)
    factors = _GROUP_PROFILES[groups] + 0.6 * rng.standard_normal((n_regions, 3))

    var_names = ["ERP"] + [f"X{j:02d}" for j in range(2, 19)]
    p = len(var_names)
    mix = rng.uniform(-0.9, 0.9, size=(3, p))
    data = factors @ mix + 0.8 * rng.standard_normal((n_regions, p))
    data[:, 0] = np.abs(data[:, 0]) * 400 + 1500  # population-like, positive

    # X17: salvageable right skew; X18: spikes that stay skewed after log1p
    data[:, p - 2] = np.exp(1.3 * rng.standard_normal(n_regions))
    spikes = np.zeros(n_regions)
    spike_rows = rng.choice(n_regions, size=max(3, n_regions // 40), replace=False)
    spikes[spike_rows] = rng.uniform(5e4, 5e5, size=spike_rows.size)
    data[:, p - 1] = spikes
    # X16: near-duplicate of X02, pruned by the correlation screen
    data[:, p - 3] = data[:, 1] + 0.1 * rng.standard_normal(n_regions)

    mask = np.zeros((n_regions, p), dtype=bool)
    eligible = [(i, j) for i in range(n_regions) for j in range(1, p - 3)]
    picks = rng.choice(len(eligible), size=min(missing_cells, len(eligible)), replace=False)
    for t in picks:
        mask[eligible[t]] = True

    zero_erp_row = int(rng.integers(0, n_regions))
    data[zero_erp_row, 0] = 0.0

    def fmt(i: int, j: int) -> str:
        if mask[i, j]:
            return "NA"
        return repr(float(data[i, j]))

    lines = ["region_id," + ",".join(var_names)]
    for i, rid in enumerate(region_ids):
        lines.append(rid + "," + ",".join(fmt(i, j) for j in range(p)))
    for extra in ("NS01", "NS02"):
        row = ["NA"] + [repr(float(x)) for x in rng.standard_normal(p - 1)]
        lines.append(extra + "," + ",".join(row))
    values_path = out / "values.csv"
    values_path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")

    lines = ["region_id,name,state,remoteness,is_spatial"]
    for i, rid in enumerate(region_ids):
        state = STATE_CODES[int(rng.integers(0, len(STATE_CODES)))]
        remoteness = int(rng.integers(1, 6))
        lines.append(f"{rid},Region {i + 1},{state},{remoteness},true")
    lines.append("NS01,Migratory - Offshore,NSW,,false")
    lines.append("NS02,No usual address,VIC,,false")
    regions_path = out / "regions.csv"
    regions_path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")

    lines = ["short_form,long_name"]
    lines.append("ERP,Estimated resident population")
    for name in var_names[1:]:
        lines.append(f"{name},Synthetic indicator {name}")
    variables_path = out / "variables.csv"
    variables_path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")

    lines = ["region_id,neighbor_id"]
    index = {cell: rid for cell, rid in zip(cells, region_ids)}
    for (r, c), rid in zip(cells, region_ids):
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if dr == dc == 0:
                    continue
                other = index.get((r + dr, c + dc))
                if other is not None and rid < other:
                    lines.append(f"{rid},{other}")
    adjacency_path = out / "adjacency.csv"
    adjacency_path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")

    features = []
    for (r, c), rid in zip(cells, region_ids):
        ring = [[c, r], [c + 1, r], [c + 1, r + 1], [c, r + 1], [c, r]]
        features.append(
            {
                "type": "Feature",
                "properties": {"region_id": rid},
                "geometry": {"type": "Polygon", "coordinates": [ring]},
            }
        )
    boundaries_path = out / "boundaries.geojson"
    boundaries_path.write_text(
        json.dumps({"type": "FeatureCollection", "features": features}) + "\n",
        encoding="utf-8",
        newline="\n",
    )

    return {
        "values": values_path,
        "regions": regions_path,
        "variables": variables_path,
        "adjacency": adjacency_path,
        "boundaries": boundaries_path,
    }


def main(argv: list[str] | None = None) -> int:
    import argparse

    parser = argparse.ArgumentParser(description="Write synthetic demo inputs.")
    parser.add_argument("out_dir")
    parser.add_argument("--regions", type=int, default=120)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)
    paths = make_synthetic_inputs(args.out_dir, n_regions=args.regions, seed=args.seed)
    for role, path in paths.items():
        print(f"{role}: {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
