"""Multi-view kernel clustering via unified matrix factorization.

Views enter as precomputed kernels or as feature matrices with a kernel
recipe. The solver alternates closed-form updates of per-view coefficient
matrices, a shared row-orthonormal embedding, and simplex view weights;
k-means on the embedding columns yields labels. Baselines (kernel k-means
and its multi-kernel extension), external clustering metrics, and
Friedman/Nemenyi rank statistics round out the experiment loop.
"""

from .errors import (
    AsymmetricKernelError,
    BadParamError,
    CorruptHeaderError,
    DimensionMismatchError,
    LengthMismatchError,
    MissingFileError,
    MvkmfError,
    NonFiniteError,
    ParseError,
    RankDeficientWarning,
    TooFewPointsError,
    TruncatedDataError,
    ZeroDiagonalError,
)
from .io import (
    DatasetManifest,
    RunRecord,
    ViewSource,
    load_dataset,
    load_manifest,
    make_synthetic,
    read_labels,
    read_matrix,
    save_manifest,
    save_synthetic_dataset,
    write_labels,
    write_matrix,
    write_pgm,
)
from .kernels import (
    FeatureMatrix,
    KernelMatrix,
    KernelSet,
    KernelSpec,
    build_kernel,
    median_heuristic_sigma,
    normalize_kernel,
    validate_kernel_set,
)
from .kmeans import KMeansConfig, Labeling, kmeans
from .metrics import MetricReport, accuracy, ari, evaluate, nmi, purity
from .solver import (
    SolverConfig,
    SolverState,
    fit,
    fit_kkm,
    fit_mkkm,
    init_state,
    iterate,
    objective,
    update_g,
    update_h,
    update_weights,
)
from .stats import (
    RankSummary,
    ResultsTable,
    f_survival,
    friedman,
    nemenyi_cd,
    pairwise_significance,
    read_results_table,
    write_results_table,
)

__version__ = "0.1.0"

__all__ = [
    "AsymmetricKernelError",
    "BadParamError",
    "CorruptHeaderError",
    "DatasetManifest",
    "DimensionMismatchError",
    "FeatureMatrix",
    "KMeansConfig",
    "KernelMatrix",
    "KernelSet",
    "KernelSpec",
    "Labeling",
    "LengthMismatchError",
    "MetricReport",
    "MissingFileError",
    "MvkmfError",
    "NonFiniteError",
    "ParseError",
    "RankDeficientWarning",
    "RankSummary",
    "ResultsTable",
    "RunRecord",
    "SolverConfig",
    "SolverState",
    "TooFewPointsError",
    "TruncatedDataError",
    "ViewSource",
    "ZeroDiagonalError",
    "accuracy",
    "ari",
    "build_kernel",
    "evaluate",
    "f_survival",
    "fit",
    "fit_kkm",
    "fit_mkkm",
    "friedman",
    "init_state",
    "iterate",
    "kmeans",
    "load_dataset",
    "load_manifest",
    "make_synthetic",
    "median_heuristic_sigma",
    "nemenyi_cd",
    "nmi",
    "normalize_kernel",
    "objective",
    "pairwise_significance",
    "purity",
    "read_labels",
    "read_matrix",
    "read_results_table",
    "save_manifest",
    "save_synthetic_dataset",
    "update_g",
    "update_h",
    "update_weights",
    "validate_kernel_set",
    "write_labels",
    "write_matrix",
    "write_pgm",
    "write_results_table",
]
