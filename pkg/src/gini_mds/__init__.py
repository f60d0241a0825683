"""Multidimensional scaling with generalized Gini pseudo-distances."""

from .data import (
    ContaminationSpec,
    Dataset,
    SimSpec,
    contaminate,
    gen_heavy_tailed,
    load_csv,
    standardize,
    write_csv,
)
from .embed import (
    Embedding,
    StressConfig,
    classical_mds,
    double_center,
    kruskal_stress,
    minimize_stress,
    stress_loss,
)
from .errors import (
    DataParseError,
    DegenerateInputError,
    GiniMDSError,
    InvalidConfigError,
    InvalidInputError,
    InvalidParameterError,
    NumericError,
)
from .evaluate import (
    EvalReport,
    distance_correlations,
    evaluate_embedding,
    nn_label_agreement,
    silhouette,
    trustworthiness,
)
from .metrics import (
    GiniParams,
    empirical_survival,
    gen_gini_directed,
    gen_gini_distance,
    gini_norm,
    gini_pseudo_distance,
    midrank,
    pairwise_matrix,
)
from .tune import NuGrid, TuneReport, alternating_tune, default_grid, tune_nu

__version__ = "0.1.0"

__all__ = [
    "alternating_tune",
    "classical_mds",
    "contaminate",
    "ContaminationSpec",
    "DataParseError",
    "Dataset",
    "default_grid",
    "DegenerateInputError",
    "distance_correlations",
    "double_center",
    "Embedding",
    "empirical_survival",
    "EvalReport",
    "evaluate_embedding",
    "gen_gini_directed",
    "gen_gini_distance",
    "gen_heavy_tailed",
    "gini_norm",
    "gini_pseudo_distance",
    "GiniMDSError",
    "GiniParams",
    "InvalidConfigError",
    "InvalidInputError",
    "InvalidParameterError",
    "kruskal_stress",
    "load_csv",
    "midrank",
    "minimize_stress",
    "nn_label_agreement",
    "NuGrid",
    "NumericError",
    "pairwise_matrix",
    "silhouette",
    "SimSpec",
    "standardize",
    "stress_loss",
    "StressConfig",
    "trustworthiness",
    "tune_nu",
    "TuneReport",
    "write_csv",
]
