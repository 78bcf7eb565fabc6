"""Synthesize labeled datasets along optimal-transport generalized geodesics."""
from ._accel import USE_NUMBA
from .data import (
    ClassConditional,
    LabeledDataset,
    PaddedLabelSpace,
    SimplexWeights,
    harden,
    pad_label,
    split_by_class,
    validate,
)
from .datagen import checkerboard, gaussian_mixture, shifted_copy
from .geodesic import combine, displacement_interpolate, mccann_dataset
from .io import RunConfig, load_dataset, save_dataset
from .labels import (
    LabelConfig,
    LabelDistanceMatrix,
    bures_w2_squared,
    label_distance_matrix,
    soft_label_cost,
)
from .maps import DatasetMap, barycentric_map, batched_barycentric_map, identity_map, knn_pseudolabel
from .ot import Coupling, SinkhornConfig, exact_ot, sinkhorn, sqeuclidean_cost, w2_squared_empirical
from .otdd import OtddConfig, OtddResult, otdd, otdd_cost_matrix
from .projection import (
    ProjectionProblem,
    ProjectionSolution,
    build_projection_problem,
    dataset_distance_2q,
    euclidean_generalized_geodesic_distance,
    geodesic_distance_to_target,
    simplex_grid,
    solve_projection_weights,
    surrogate,
)

__version__ = "0.1.0"

__all__ = [
    "USE_NUMBA",
    "ClassConditional",
    "Coupling",
    "DatasetMap",
    "LabelConfig",
    "LabelDistanceMatrix",
    "LabeledDataset",
    "OtddConfig",
    "OtddResult",
    "PaddedLabelSpace",
    "ProjectionProblem",
    "ProjectionSolution",
    "RunConfig",
    "SimplexWeights",
    "SinkhornConfig",
    "barycentric_map",
    "batched_barycentric_map",
    "build_projection_problem",
    "bures_w2_squared",
    "checkerboard",
    "combine",
    "dataset_distance_2q",
    "displacement_interpolate",
    "euclidean_generalized_geodesic_distance",
    "exact_ot",
    "gaussian_mixture",
    "geodesic_distance_to_target",
    "harden",
    "identity_map",
    "knn_pseudolabel",
    "label_distance_matrix",
    "load_dataset",
    "mccann_dataset",
    "otdd",
    "otdd_cost_matrix",
    "pad_label",
    "save_dataset",
    "shifted_copy",
    "simplex_grid",
    "sinkhorn",
    "soft_label_cost",
    "solve_projection_weights",
    "split_by_class",
    "sqeuclidean_cost",
    "surrogate",
    "validate",
    "w2_squared_empirical",
]
