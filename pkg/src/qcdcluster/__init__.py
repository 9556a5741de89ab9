"""Robust fuzzy clustering of multivariate time series by quantile cross-spectral features."""

from .clustering import (
    ClusterConfig,
    FuzzyPartition,
    cluster,
    delta_scan,
    fcm_exponential_run,
    fcm_noise_run,
    fcm_run,
    fcm_trimmed_run,
    select_beta,
)
from .errors import (
    ConfigError,
    DataError,
    DegenerateInputError,
    DomainError,
    EmptyClusterError,
    NumericalError,
    ParseError,
    QCDClusterError,
    ShapeError,
    SimulationError,
)
from .evaluation import AssignmentRules, classical_mds, judge_trial, run_benchmark
from .features import QuantileLevels, SmoothingKernel, d_qcd, distance_matrix, qcd_feature_vector, qcd_features
from .series import Dataset, MTSeries, load_csv, log_difference, standardize, write_csv
from .simulation import InnovationSpec, build_scenario, simulate
from .transform import correlation_features, fit_pca, transform_pca

__version__ = "0.1.0"
