"""Change-point detection for high-dimensional covariance sequences.

Detects and locates a change in the covariance structure of a sequence of
observations with a min-type scan of standardized sequential likelihood
ratio statistics; critical values come from Monte Carlo simulation of the
limiting Gaussian process on the same split grid.
"""

from .covstream import (
    DataMatrix,
    PrefixMoments,
    SegmentCovariance,
    SequentialLogDets,
    build_prefix_moments,
    log_det_spd,
    segment_covariance,
    sequential_log_dets,
    sequential_log_dets_noncentered,
    split_range,
)
from .datagen import SyntheticModel, generate, haar_orthogonal
from .detector import (
    DetectionReport,
    DetectorConfig,
    PowerDiagnostic,
    SplitProfile,
    build_profile,
    build_profile_noncentered,
    detect,
    en_power,
    min_statistic,
)
from .errors import (
    AdmissibilityError,
    CovcpError,
    DataValidationError,
    DegenerateDataError,
    InvalidSegmentError,
    NotPositiveDefiniteError,
    NumericalDegeneracyError,
)
from .moments import (
    CenteringTerms,
    KurtosisEstimate,
    centering_terms,
    kurtosis_hat,
    mu_plain,
    mu_tilde,
    sigma_nt,
    sigma_nt_squared,
    substitution_gap,
)
from .nullsim import (
    KernelGrid,
    QuantileEstimate,
    build_kernel_grid,
    kernel_sigma,
    simulate_min_quantile,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError",
    "CenteringTerms",
    "CovcpError",
    "DataMatrix",
    "DataValidationError",
    "DegenerateDataError",
    "DetectionReport",
    "DetectorConfig",
    "InvalidSegmentError",
    "KernelGrid",
    "KurtosisEstimate",
    "NotPositiveDefiniteError",
    "NumericalDegeneracyError",
    "PowerDiagnostic",
    "PrefixMoments",
    "QuantileEstimate",
    "SegmentCovariance",
    "SequentialLogDets",
    "SplitProfile",
    "SyntheticModel",
    "build_kernel_grid",
    "build_prefix_moments",
    "build_profile",
    "build_profile_noncentered",
    "centering_terms",
    "detect",
    "en_power",
    "generate",
    "haar_orthogonal",
    "kernel_sigma",
    "kurtosis_hat",
    "log_det_spd",
    "min_statistic",
    "mu_plain",
    "mu_tilde",
    "segment_covariance",
    "sequential_log_dets",
    "sequential_log_dets_noncentered",
    "sigma_nt",
    "sigma_nt_squared",
    "simulate_min_quantile",
    "split_range",
    "substitution_gap",
    "__version__",
]
