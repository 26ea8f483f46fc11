"""Interval prediction from convex dissimilarities to stored measurements."""
from .baseline import (
    LinearModel,
    fit_least_squares,
    fit_quantile_regression,
    pinball_objective,
    predict_linear,
)
from .data import (
    LorenzParams,
    Pairs,
    Scale,
    SeriesDataset,
    build_pairs,
    denormalize,
    make_lorenz_dataset,
    normalize,
    read_pairs,
    simulate_lorenz,
    split,
    write_pairs,
)
from .dissim import (
    DissimilarityResult,
    PointSet,
    SolverSettings,
    closed_form_gamma0,
    dissimilarities,
    dual_objective,
    grid_dissimilarities,
    solve_dissimilarity,
)
from .epdf import (
    ConditionalDistribution,
    OutputGrid,
    PredictionInterval,
    build_output_grid,
    central_estimate,
    conditional_distribution,
    conditioned_median,
    empirical_pdf_on_grid,
    interval_estimate,
    predict_intervals,
)
from .errors import (
    DegeneratePointSet,
    DegenerateRange,
    DimensionMismatch,
    DissimError,
    InsufficientData,
    InvalidBracket,
    NonConvergence,
    NonFinite,
    RankDeficient,
    SingularMatrix,
    TooShort,
)
from .tune import (
    EvaluationMetrics,
    TuningReport,
    ValidationSet,
    evaluate,
    log_likelihood,
    tune_c,
    tune_gamma,
    tune_gamma_multi,
)

__version__ = "0.1.0"
