"""Consensus grading of complex tasks evaluated by a crowd over multiple
expert-defined views: variance-weighted aggregation, statistical bias
detection and de-biasing, and a reproducible simulation harness."""

from .bias import (
    BiasPattern,
    BiasReport,
    DebiasStrategy,
    compute_diffs,
    compute_reports,
    debias_grades,
    detect_pattern,
)
from .engine import (
    ConsensusResult,
    EngineConfig,
    Estimate,
    Message,
    average_baseline,
    combine_overall,
    vancouver_views,
    weighted_estimate,
)
from .experiment import (
    ExperimentConfig,
    ExperimentResult,
    run_bias_sweep,
    run_experiment,
    run_model,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .metrics import MetricsReport, error_sigma, pearson, pooled_metrics, rmse
from .model import (
    Dataset,
    GradeRecord,
    InvalidDatasetError,
    ReviewGraph,
    TruthTable,
    ViewSpec,
    Violation,
    neighborhood,
    validate_dataset,
)
from .synth import GroundTruthProfile, SynthConfig, assign_reviews, generate

__version__ = "0.1.0"

__all__ = [
    "BiasPattern",
    "BiasReport",
    "ConsensusResult",
    "Dataset",
    "DebiasStrategy",
    "EngineConfig",
    "Estimate",
    "ExperimentConfig",
    "ExperimentResult",
    "GradeRecord",
    "GroundTruthProfile",
    "InvalidDatasetError",
    "KERNEL_BACKEND",
    "Message",
    "MetricsReport",
    "ReviewGraph",
    "SynthConfig",
    "TruthTable",
    "ViewSpec",
    "Violation",
    "assign_reviews",
    "average_baseline",
    "combine_overall",
    "compute_diffs",
    "compute_reports",
    "debias_grades",
    "detect_pattern",
    "error_sigma",
    "generate",
    "neighborhood",
    "pearson",
    "pooled_metrics",
    "rmse",
    "run_bias_sweep",
    "run_experiment",
    "run_model",
    "validate_dataset",
    "vancouver_views",
    "weighted_estimate",
    "__version__",
]
