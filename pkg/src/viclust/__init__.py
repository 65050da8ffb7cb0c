"""Vulnerability-index construction and cluster profiling for geographic regions.

The library turns a region-by-variable indicator table into composite
vulnerability indices (correlation-matrix PCA with Kaiser retention) and
groups regions with K-means, with seed-stability diagnostics and
map-ready outputs. See the README for the CLI front end.
"""

__version__ = "0.1.0"

from .errors import (
    ConvergenceError,
    DataError,
    DegenerateColumnError,
    GeometryError,
    MissingIntermediateError,
    PipelineError,
)
from .ingest import (
    Dataset,
    OmissionLog,
    RegionRecord,
    ValidationReport,
    VariableMeta,
    load_dataset,
    omit_unpopulated_regions,
    validate_dataset,
)
from .spatial import (
    AdjacencyGraph,
    ImputationLog,
    build_adjacency_from_polygons,
    impute_neighbor_mean,
    load_adjacency_list,
)
from .select import (
    SelectionConfig,
    SelectionOutcome,
    SelectionReport,
    compute_skewness,
    log_transform,
    pearson_correlation_matrix,
    prune_correlated,
    run_selection,
    screen_skewness,
)
from .pca import (
    IndexScores,
    PcaModel,
    fit_correlation_pca,
    fit_pca,
    index_skewness_report,
    jacobi_eigh,
    retain_components,
    retained_count,
    score,
    standardize,
    substantive_loadings,
)
from .cluster import (
    ClusterModel,
    ElbowScan,
    StabilityReport,
    adjusted_rand_index,
    elbow_scan,
    kmeans,
    stability_analysis,
)
from .profiles import (
    ClusterProfile,
    CrossTab,
    centroid_table,
    characterize,
    crosstab,
)
from .config import RunConfig

__all__ = [
    "AdjacencyGraph",
    "ClusterModel",
    "ClusterProfile",
    "ConvergenceError",
    "CrossTab",
    "DataError",
    "Dataset",
    "DegenerateColumnError",
    "ElbowScan",
    "GeometryError",
    "ImputationLog",
    "IndexScores",
    "MissingIntermediateError",
    "OmissionLog",
    "PcaModel",
    "PipelineError",
    "RegionRecord",
    "RunConfig",
    "SelectionConfig",
    "SelectionOutcome",
    "SelectionReport",
    "StabilityReport",
    "ValidationReport",
    "VariableMeta",
    "adjusted_rand_index",
    "build_adjacency_from_polygons",
    "centroid_table",
    "characterize",
    "compute_skewness",
    "crosstab",
    "elbow_scan",
    "fit_correlation_pca",
    "fit_pca",
    "impute_neighbor_mean",
    "index_skewness_report",
    "jacobi_eigh",
    "kmeans",
    "load_adjacency_list",
    "load_dataset",
    "log_transform",
    "omit_unpopulated_regions",
    "pearson_correlation_matrix",
    "prune_correlated",
    "retain_components",
    "retained_count",
    "run_selection",
    "score",
    "screen_skewness",
    "stability_analysis",
    "standardize",
    "substantive_loadings",
    "validate_dataset",
]
