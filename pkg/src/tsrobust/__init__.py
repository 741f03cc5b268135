"""Causal structure learning for multivariate time series with bootstrap robustness."""

from .autocov import (
    AutocovSet,
    ConditionalParams,
    build_toeplitz,
    conditional_params,
    estimate_autocov,
    model_implied_autocov,
)
from .exceptions import (
    DegenerateAutocovarianceError,
    DegenerateConditionalError,
    DimensionError,
    GenerationFailedError,
    IngestionError,
    InsufficientDataError,
    InvalidModelError,
    StationarityError,
    TSRobustError,
)
from .harness import Cell, ExperimentConfig, emit_plots, load_case_study, run_case_study, run_experiment
from .model import (
    CausalModel,
    StructureSignature,
    TimeSeriesData,
    is_acyclic,
    is_stationary,
    signature_of,
    stack_full_matrix,
)
from .robustness import RobustnessAnalyzer, RobustnessReport, SurrogateConfig, coefficient_stats, compute_robustness
from .scoring import accuracy_score, normality_diagnostic, normalized_error, obs_equivalent
from .sptime import FitConfig, FitResult, SparsestPermutationVAR, cholesky_decompose, fit, prune_edges, refit_on_structure
from .synth import ModelGenConfig, SurrogateGenerator, random_model, simulate, surrogate

__version__ = "0.1.0"
