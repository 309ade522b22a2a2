"""Feature extraction, labeling, clustering, and classification of machining data."""

from .features import (
    FeatureMatrix,
    MachiningSeries,
    WindowSpec,
    build_feature_matrix,
    filter_logs,
    load_series,
    load_series_file,
    select_parameters,
    window_values,
)
from .measurements import (
    MeasurementTable,
    apply_measurement_shift,
    derive_measurement_labels,
    measurement_stats,
    read_measurements,
)
from .classify import (
    NaiveBayesModel,
    SvmModel,
    predict,
    split_train_test,
    train_naive_bayes,
    train_svm,
)
from .cluster import (
    ClusteringResult,
    cluster_accuracy,
    hierarchical_cluster,
    kmeans_cluster,
    scree,
    silhouette,
)
from .rfe import RfeResult, rfe_select

__all__ = [
    "FeatureMatrix",
    "MachiningSeries",
    "WindowSpec",
    "build_feature_matrix",
    "filter_logs",
    "load_series",
    "load_series_file",
    "select_parameters",
    "window_values",
    "MeasurementTable",
    "apply_measurement_shift",
    "derive_measurement_labels",
    "measurement_stats",
    "read_measurements",
    "NaiveBayesModel",
    "SvmModel",
    "predict",
    "split_train_test",
    "train_naive_bayes",
    "train_svm",
    "ClusteringResult",
    "cluster_accuracy",
    "hierarchical_cluster",
    "kmeans_cluster",
    "scree",
    "silhouette",
    "RfeResult",
    "rfe_select",
]
