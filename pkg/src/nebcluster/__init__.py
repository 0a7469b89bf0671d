"""Hierarchical clustering via mixture overclustering and density-path merging."""

__version__ = "0.1.0"

from .datasets import DatasetSpec, PointSet, generate, load_csv, save_csv
from .errors import (
    FilterFailureError,
    FitFailureError,
    IngestionError,
    NebClusterError,
    NumericalError,
    ValidationError,
)
from .filtering import FilterConfig, FilteredModel, filter_components
from .graph import ClusterGraph, build_graph, graph_from_edges, widest_path_tree
from .hierarchy import (
    Clustering,
    Dendrogram,
    ThresholdCurve,
    build_dendrogram,
    cut,
    threshold_curve,
)
from .metrics import StabilityReport, ari, overcluster_stability, seed_stability
from .mixture import (
    FitConfig,
    MixtureModel,
    fit,
    hard_assign,
    kmeans,
    load_model,
    log_density,
    log_density_gradient,
    responsibilities,
    save_model,
)
from .neb import DensityPath, NebConfig, optimize_path, straight_line_bottleneck
from .pipeline import RunConfig, compare_strategies, run_pipeline, run_strategy
from .strategies import (
    MergeStrategy,
    dip_merge,
    dip_statistic,
    euclidean_merge,
    kmeans_overcluster_merge,
    oracle_merge,
)

__all__ = [
    "DatasetSpec",
    "PointSet",
    "generate",
    "load_csv",
    "save_csv",
    "FitConfig",
    "MixtureModel",
    "fit",
    "log_density",
    "log_density_gradient",
    "responsibilities",
    "hard_assign",
    "kmeans",
    "save_model",
    "load_model",
    "FilterConfig",
    "FilteredModel",
    "filter_components",
    "NebConfig",
    "DensityPath",
    "optimize_path",
    "straight_line_bottleneck",
    "ClusterGraph",
    "build_graph",
    "graph_from_edges",
    "widest_path_tree",
    "Dendrogram",
    "Clustering",
    "ThresholdCurve",
    "build_dendrogram",
    "cut",
    "threshold_curve",
    "MergeStrategy",
    "oracle_merge",
    "euclidean_merge",
    "dip_merge",
    "dip_statistic",
    "kmeans_overcluster_merge",
    "ari",
    "StabilityReport",
    "seed_stability",
    "overcluster_stability",
    "RunConfig",
    "run_pipeline",
    "run_strategy",
    "compare_strategies",
    "NebClusterError",
    "ValidationError",
    "IngestionError",
    "FitFailureError",
    "FilterFailureError",
    "NumericalError",
]
