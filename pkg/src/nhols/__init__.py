"""Label spreading on graphs with nonlinear higher-order (triangle) terms."""
from .data import (
    LabelSample,
    PointCloud,
    SbmSpec,
    build_knn_graph,
    enumerate_triangles,
    generate_sbm,
    sample_labeled_set,
)
from .errors import (
    ConfigError,
    DegenerateTriple,
    DomainError,
    InvalidEval,
    InvalidLabels,
    InvalidNode,
    InvalidParam,
    InvalidWeight,
    IsolatedNode,
    NHOLSError,
    ParseError,
    ShapeError,
)
from .experiments import (
    CvConfig,
    Grid,
    Method,
    SolverSettings,
    accuracy,
    benchmark_runtime,
    fit_and_score,
    grid_search_cv,
    parse_method,
    run_experiment,
    run_sbm_sweep,
)
from .mixing import (
    ARITHMETIC,
    GEOMETRIC,
    HARMONIC,
    L2,
    MAXIMUM,
    STANDARD_KINDS,
    MixingSpec,
    parse_mixing,
)
from .spreading import (
    LabelData,
    SpreadParams,
    SpreadResult,
    apply_hyper_operator,
    apply_normalized_adjacency,
    label_column_scale,
    nhols_all_classes,
    nhols_batch,
    nhols_run,
    nhols_step,
    phi,
    predict,
    smooth_labels,
    standard_ls_batch,
    standard_ls_run,
)
from .structures import (
    SparseGraph,
    TriangleTensor,
    build_graph,
    build_triangle_tensor,
    pair_weights,
    validate_coverage,
)

__version__ = "0.1.0"
