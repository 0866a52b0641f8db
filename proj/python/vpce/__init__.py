"""Visual place-cell encoding.

Thin Python layer over the C++ core. Arrays are numpy; images are
(height, width, 3) uint8.
"""

from ._vpce import (
    Arena,
    ClusterModel,
    Ensemble,
    IoError,
    NumericError,
    RunConfig,
    ValidationError,
    activate,
    build,
    calinski_harabasz,
    cluster,
    color_histogram,
    cosine,
    davies_bouldin,
    euclidean,
    eval_clusters,
    eval_grouping,
    eval_remap,
    eval_wall,
    explore,
    extract,
    feature_dim,
    features,
    hog,
    kmeans,
    open_arena,
    pearson,
    pose_is_valid,
    render,
    report,
    silhouette,
    simulate,
    spatial_histogram,
    students_t,
    walled_arena,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
