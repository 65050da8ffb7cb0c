"""Pipeline stages over serialized intermediates.

Each stage reads files written by its predecessors and writes its own, so
any stage can be re-run in isolation and verified against the manifest.
Intermediate tables reuse the public CSV schemas; the two JSON models
(PCA, clusters) round-trip at full float precision.

Stage order: ingest, select, pca, elbow (only when k is unset), cluster,
stability, profile.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .cluster import (
    ClusterModel,
    elbow_scan,
    kmeans,
    stability_analysis,
)
from .config import RunConfig
from .errors import DataError, MissingIntermediateError
from .ingest import (
    Dataset,
    OmissionLog,
    load_dataset,
    omit_unpopulated_regions,
    save_dataset,
    save_regions,
    validate_dataset,
)
from .manifest import ManifestBuilder
from .pca import (
    IndexScores,
    PcaModel,
    fit_correlation_pca,
    index_skewness_report,
    retain_components,
    score,
)
from .profiles import (
    centroid_table,
    characterize,
    crosstab,
    profile_json_dict,
    read_scores_csv,
    write_assignments_csv,
    write_atlas_geojson,
    write_crosstab_csv,
    write_scores_csv,
)
from .select import SelectionConfig, run_selection
from .spatial import (
    AdjacencyGraph,
    build_adjacency_from_polygons,
    empty_graph,
    load_adjacency_list,
    save_imputation_log,
)

F_INGESTED_VALUES = "ingested_values.csv"
F_INGESTED_REGIONS = "ingested_regions.csv"
F_INGESTED_VARIABLES = "ingested_variables.csv"
F_OMISSION_LOG = "omission_log.csv"
F_VALIDATION = "validation.json"
F_SELECTED_VALUES = "selected_values.csv"
F_SELECTED_VARIABLES = "selected_variables.csv"
F_IMPUTATION_LOG = "imputation_log.csv"
F_SELECTION_REPORT = "selection_report.json"
F_PCA_MODEL = "pca_model.json"
F_SCORES = "scores.csv"
F_INDEX_SKEWNESS = "index_skewness.json"
F_ELBOW = "elbow.csv"
F_CLUSTER_MODEL = "cluster_model.json"
F_ASSIGNMENTS = "assignments.csv"
F_STABILITY = "stability.json"
F_PROFILE = "profile.json"
F_CROSSTAB_REMOTENESS = "crosstab_remoteness.csv"
F_CROSSTAB_STATE = "crosstab_state.csv"
F_ATLAS = "atlas.geojson"

STEP_NAMES = ("ingest", "select", "pca", "elbow", "cluster", "stability", "profile")


def _require(out_dir: Path, name: str, step: str) -> Path:
    path = out_dir / name
    if not path.exists():
        raise MissingIntermediateError(
            f"step {step!r} needs {name}, which no earlier step has produced in {out_dir}"
        )
    return path


def _write_json(path: Path, obj: dict) -> None:
    path.write_bytes((json.dumps(obj, indent=2) + "\n").encode("utf-8"))


def _save_variables_with_transform(dataset: Dataset, path: Path) -> None:
    lines = ["short_form,long_name,transform"]
    for v in dataset.variables:
        long_name = v.long_name
        if any(ch in long_name for ch in ",\"\n"):
            long_name = '"' + long_name.replace('"', '""') + '"'
        lines.append(f"{v.short_form},{long_name},{v.transform_applied}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _save_plain_variables(dataset: Dataset, path: Path) -> None:
    lines = ["short_form,long_name"]
    for v in dataset.variables:
        long_name = v.long_name
        if any(ch in long_name for ch in ",\"\n"):
            long_name = '"' + long_name.replace('"', '""') + '"'
        lines.append(f"{v.short_form},{long_name}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _save_omission_log(log: OmissionLog, path: Path) -> None:
    lines = ["region_id,reason"]
    for region_id, reason in log.removed:
        lines.append(f"{region_id},{reason}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _load_omitted_ids(path: Path) -> list[str]:
    lines = [ln for ln in path.read_text(encoding="utf-8").split("\n") if ln]
    return [ln.split(",")[0] for ln in lines[1:]]


def stage_ingest(cfg: RunConfig, manifest: ManifestBuilder) -> None:
    out = Path(cfg.output_dir)
    dataset = load_dataset(cfg.values, cfg.regions, cfg.variables)
    survivors, omission_log = omit_unpopulated_regions(dataset, cfg.erp_variable)
    report = validate_dataset(survivors, cfg.missing_flag_threshold)

    save_dataset(survivors, out / F_INGESTED_VALUES)
    save_regions(survivors.regions, out / F_INGESTED_REGIONS)
    _save_plain_variables(survivors, out / F_INGESTED_VARIABLES)
    _save_omission_log(omission_log, out / F_OMISSION_LOG)
    _write_json(out / F_VALIDATION, report.to_json_dict())

    inputs = [cfg.values, cfg.regions] + ([cfg.variables] if cfg.variables else [])
    manifest.record_step(
        "ingest",
        inputs,
        [out / F_INGESTED_VALUES, out / F_INGESTED_REGIONS, out / F_INGESTED_VARIABLES,
         out / F_OMISSION_LOG, out / F_VALIDATION],
        notes={"regions_in": dataset.n, "regions_kept": survivors.n,
               "omitted": len(omission_log)},
    )


def _load_ingested(out: Path, step: str) -> Dataset:
    values = _require(out, F_INGESTED_VALUES, step)
    regions = _require(out, F_INGESTED_REGIONS, step)
    variables = _require(out, F_INGESTED_VARIABLES, step)
    return load_dataset(values, regions, variables)


def _build_graph(cfg: RunConfig, dataset: Dataset, omitted_ids: list[str]) -> AdjacencyGraph:
    if cfg.boundaries:
        return build_adjacency_from_polygons(cfg.boundaries, cfg.snap_tolerance)
    if cfg.adjacency:
        universe = dataset.region_ids + [r for r in omitted_ids if r not in set(dataset.region_ids)]
        return load_adjacency_list(cfg.adjacency, universe)
    # no contiguity input: every fill degrades to the column mean
    return empty_graph(dataset.region_ids)


def stage_select(cfg: RunConfig, manifest: ManifestBuilder) -> None:
    out = Path(cfg.output_dir)
    dataset = _load_ingested(out, "select")
    omitted = _load_omitted_ids(_require(out, F_OMISSION_LOG, "select"))
    graph = _build_graph(cfg, dataset, omitted)
    outcome = run_selection(
        dataset,
        graph,
        SelectionConfig(
            erp_variable=cfg.erp_variable,
            skew_threshold=cfg.skew_threshold,
            corr_threshold=cfg.corr_threshold,
            manual_removals=cfg.manual_removals,
        ),
    )
    save_dataset(outcome.dataset, out / F_SELECTED_VALUES)
    _save_variables_with_transform(outcome.dataset, out / F_SELECTED_VARIABLES)
    save_imputation_log(outcome.imputation_log, out / F_IMPUTATION_LOG)
    _write_json(out / F_SELECTION_REPORT, outcome.report.to_json_dict())

    inputs = [out / F_INGESTED_VALUES, out / F_INGESTED_REGIONS]
    if cfg.boundaries:
        inputs.append(cfg.boundaries)
    if cfg.adjacency:
        inputs.append(cfg.adjacency)
    manifest.record_step(
        "select",
        inputs,
        [out / F_SELECTED_VALUES, out / F_SELECTED_VARIABLES,
         out / F_IMPUTATION_LOG, out / F_SELECTION_REPORT],
        notes={"variables_in": dataset.p, "variables_kept": outcome.dataset.p,
               "imputed_cells": len(outcome.imputation_log)},
    )


def _pca_model_dict(model: PcaModel) -> dict:
    return {
        "variable_order": list(model.variable_order),
        "means": [float(x) for x in model.means],
        "sds": [float(x) for x in model.sds],
        "loadings": [[float(x) for x in row] for row in model.loadings],
        "eigenvalues": [float(x) for x in model.eigenvalues],
        "variance_fraction": [float(x) for x in model.variance_fraction],
        "retained": model.retained,
    }


def load_pca_model(path: str | Path) -> PcaModel:
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    return PcaModel(
        variable_order=tuple(d["variable_order"]),
        means=np.array(d["means"], dtype=float),
        sds=np.array(d["sds"], dtype=float),
        loadings=np.array(d["loadings"], dtype=float),
        eigenvalues=np.array(d["eigenvalues"], dtype=float),
        variance_fraction=np.array(d["variance_fraction"], dtype=float),
        retained=d["retained"],
    )


def stage_pca(cfg: RunConfig, manifest: ManifestBuilder) -> None:
    out = Path(cfg.output_dir)
    values = _require(out, F_SELECTED_VALUES, "pca")
    regions = _require(out, F_INGESTED_REGIONS, "pca")
    dataset = load_dataset(values, regions)
    model, z = fit_correlation_pca(dataset)
    model = retain_components(model, cfg.retention, cfg.retention_param)
    scores = score(model, z, dataset.region_ids)
    skew = index_skewness_report(scores)

    _write_json(out / F_PCA_MODEL, _pca_model_dict(model))
    write_scores_csv(scores, out / F_SCORES)
    _write_json(
        out / F_INDEX_SKEWNESS,
        {
            "indices": [
                {"index": r.index, "skewness": r.skewness, "band": r.band,
                 "acceptable": r.acceptable}
                for r in skew
            ]
        },
    )
    manifest.record_step(
        "pca",
        [values, regions],
        [out / F_PCA_MODEL, out / F_SCORES, out / F_INDEX_SKEWNESS],
        notes={"retained": model.retained,
               "cumulative_variance": float(model.variance_fraction[: model.retained].sum())},
    )


def _load_scores(out: Path, step: str) -> IndexScores:
    return read_scores_csv(_require(out, F_SCORES, step))


def stage_elbow(cfg: RunConfig, manifest: ManifestBuilder) -> int | None:
    out = Path(cfg.output_dir)
    scores = _load_scores(out, "elbow")
    scan = elbow_scan(
        scores,
        k_max=min(cfg.k_max, len(scores.region_ids)),
        seed=cfg.main_seed,
        init=cfg.init,
        restarts=cfg.restarts,
        threads=cfg.threads,
    )
    lines = ["k,wcss"]
    for k, wcss in zip(scan.k_values, scan.wcss_per_k):
        lines.append(f"{k},{repr(wcss)}")
    (out / F_ELBOW).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    manifest.record_step(
        "elbow",
        [out / F_SCORES],
        [out / F_ELBOW],
        notes={"suggested_k": scan.suggested_k},
    )
    return scan.suggested_k


def suggested_k_from_elbow_csv(path: str | Path) -> int | None:
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").split("\n") if ln]
    wcss = [float(ln.split(",")[1]) for ln in lines[1:]]
    if len(wcss) < 3:
        return None
    best, suggested = -float("inf"), None
    for k in range(2, len(wcss)):
        curvature = wcss[k - 2] - 2.0 * wcss[k - 1] + wcss[k]
        if curvature > best:
            best, suggested = curvature, k
    return suggested


def resolve_k(cfg: RunConfig, out: Path, step: str) -> int:
    if cfg.k is not None:
        return cfg.k
    model_path = out / F_CLUSTER_MODEL
    if model_path.exists():
        with open(model_path, encoding="utf-8") as fh:
            return int(json.load(fh)["k"])
    elbow_path = out / F_ELBOW
    if elbow_path.exists():
        k = suggested_k_from_elbow_csv(elbow_path)
        if k is not None:
            return k
    raise MissingIntermediateError(
        f"step {step!r} needs k: set it in the config or run the elbow step first"
    )


def _cluster_model_dict(model: ClusterModel) -> dict:
    return {
        "k": model.k,
        "seed": model.seed,
        "init": model.init,
        "restarts": model.restarts,
        "iterations": model.iterations,
        "wcss": model.wcss,
        "wcss_trace": list(model.wcss_trace),
        "centroids": [[float(x) for x in row] for row in model.centroids],
    }


def load_cluster_model(model_path: str | Path, assignments_path: str | Path) -> ClusterModel:
    with open(model_path, encoding="utf-8") as fh:
        d = json.load(fh)
    lines = [ln for ln in Path(assignments_path).read_text(encoding="utf-8").split("\n") if ln]
    labels = np.array([int(ln.split(",")[1]) for ln in lines[1:]], dtype=int)
    return ClusterModel(
        k=int(d["k"]),
        assignments=labels,
        centroids=np.array(d["centroids"], dtype=float),
        wcss=float(d["wcss"]),
        iterations=int(d["iterations"]),
        seed=int(d["seed"]),
        init=d["init"],
        restarts=int(d["restarts"]),
        wcss_trace=tuple(d["wcss_trace"]),
    )


def stage_cluster(
    cfg: RunConfig, manifest: ManifestBuilder, k_override: int | None = None
) -> None:
    out = Path(cfg.output_dir)
    scores = _load_scores(out, "cluster")
    k = k_override if k_override is not None else resolve_k(cfg, out, "cluster")
    model = kmeans(
        scores, k, cfg.main_seed, init=cfg.init, restarts=cfg.restarts,
        threads=cfg.threads,
    )
    _write_json(out / F_CLUSTER_MODEL, _cluster_model_dict(model))
    write_assignments_csv(model, scores.region_ids, out / F_ASSIGNMENTS)
    manifest.record_step(
        "cluster",
        [out / F_SCORES],
        [out / F_CLUSTER_MODEL, out / F_ASSIGNMENTS],
        notes={"k": k, "wcss": model.wcss},
    )


def stage_stability(
    cfg: RunConfig, manifest: ManifestBuilder, k_override: int | None = None
) -> None:
    out = Path(cfg.output_dir)
    scores = _load_scores(out, "stability")
    k = k_override if k_override is not None else resolve_k(cfg, out, "stability")
    report = stability_analysis(
        scores, k, seeds=cfg.seeds, init=cfg.init, restarts=cfg.restarts,
        threads=cfg.threads,
    )
    _write_json(
        out / F_STABILITY,
        {
            "cutoff": report.cutoff,
            "seeds": list(report.seeds),
            "ari": [[float(x) for x in row] for row in report.ari],
            "flagged_pairs": [
                {"seed_a": a, "seed_b": b, "ari": v}
                for a, b, v in report.flagged_pairs
            ],
        },
    )
    manifest.record_step(
        "stability",
        [out / F_SCORES],
        [out / F_STABILITY],
        notes={"k": k, "flagged": len(report.flagged_pairs)},
    )


def stage_profile(cfg: RunConfig, manifest: ManifestBuilder) -> None:
    out = Path(cfg.output_dir)
    scores = _load_scores(out, "profile")
    model = load_cluster_model(
        _require(out, F_CLUSTER_MODEL, "profile"),
        _require(out, F_ASSIGNMENTS, "profile"),
    )
    pca_model = load_pca_model(_require(out, F_PCA_MODEL, "profile"))
    dataset = _load_ingested(out, "profile")
    records = {r.region_id: r for r in dataset.regions}
    try:
        regions = [records[rid] for rid in scores.region_ids]
    except KeyError as exc:
        raise DataError(f"scores reference unknown region {exc.args[0]!r}") from None

    profile = centroid_table(model, scores)
    characterizations = characterize(model, pca_model, scores, cfg.loading_threshold)
    _write_json(out / F_PROFILE, profile_json_dict(profile, characterizations))

    outputs = [out / F_PROFILE]
    for axis, fname in (("remoteness", F_CROSSTAB_REMOTENESS),
                        ("state", F_CROSSTAB_STATE)):
        tab = crosstab(model, regions, axis)
        write_crosstab_csv(tab, out / fname)
        outputs.append(out / fname)

    inputs = [out / F_SCORES, out / F_CLUSTER_MODEL, out / F_ASSIGNMENTS,
              out / F_PCA_MODEL, out / F_INGESTED_REGIONS]
    if cfg.boundaries:
        write_atlas_geojson(cfg.boundaries, scores, model, out / F_ATLAS)
        inputs.append(cfg.boundaries)
        outputs.append(out / F_ATLAS)
    manifest.record_step("profile", inputs, outputs)


def _staged(name: str, fn, cfg: RunConfig, manifest: ManifestBuilder):
    """Run one stage, prefixing any pipeline error with the step name."""
    from .errors import PipelineError

    try:
        return fn(cfg, manifest)
    except PipelineError as exc:
        raise type(exc)(f"step {name!r}: {exc}") from exc


def run_step(name: str, cfg: RunConfig) -> None:
    """Run exactly one stage against the intermediates in the output dir."""
    cfg.validate()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = ManifestBuilder(cfg, out)
    stages = {
        "ingest": stage_ingest,
        "select": stage_select,
        "pca": stage_pca,
        "elbow": stage_elbow,
        "cluster": stage_cluster,
        "stability": stage_stability,
        "profile": stage_profile,
    }
    if name not in stages:
        raise DataError(f"unknown step {name!r}; expected one of {', '.join(STEP_NAMES)}")
    _staged(name, stages[name], cfg, manifest)
    manifest.write()


def run_all(cfg: RunConfig) -> Path:
    """Full pipeline; returns the manifest path.

    When k is unset, an elbow scan picks it and the choice lands in the
    manifest. Outputs are byte-identical for identical configs provided
    the timestamp source is pinned (run_timestamp or SOURCE_DATE_EPOCH).
    """
    cfg.validate()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest_path = out / "manifest.json"
    if manifest_path.exists():
        manifest_path.unlink()  # a full run never inherits stale step records
    manifest = ManifestBuilder(cfg, out)
    _staged("ingest", stage_ingest, cfg, manifest)
    _staged("select", stage_select, cfg, manifest)
    _staged("pca", stage_pca, cfg, manifest)
    k = cfg.k
    if k is None:
        k = _staged("elbow", stage_elbow, cfg, manifest)
        if k is None:
            raise DataError(
                "elbow scan produced no suggestion (k_max too small); set k explicitly"
            )
    _staged("cluster", lambda c, m: stage_cluster(c, m, k), cfg, manifest)
    _staged("stability", lambda c, m: stage_stability(c, m, k), cfg, manifest)
    _staged("profile", stage_profile, cfg, manifest)
    return manifest.write()
