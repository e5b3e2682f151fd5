"""User-level differentially private releases over grid-partitioned data.

The pipeline: exact sensitivity and worst-case-bias calculators feed
per-grid error budgets; the suppression routine trades those budgets for a
smaller composition factor; mechanisms release noisy statistics; synthetic
generators and Monte Carlo loops evaluate the whole stack.
"""

from .composition import (
    ClipPlan,
    ClipUserResult,
    ErrorBudget,
    PseudoUserResult,
    Suppression,
    clip_user,
    grid_error,
    post_release,
    privacy_loss,
    pseudo_user_optimize,
)
from .dataset import (
    Dataset,
    GridStats,
    OccupancyArray,
    grid_stats,
    parse_dataset,
    parse_occupancy,
    population_stats,
)
from .errors import GridDPError
from .grouping import (
    ArrayGroup,
    array_count_k,
    array_means,
    best_fit,
    best_fit_count,
    median_mub,
    optimized_mub,
    wrap_around,
)
from .harness import (
    CurvePoint,
    ExperimentConfig,
    ScalingLawCheck,
    check_scaling_laws,
    mae_eval,
    monte_carlo_error,
    monte_carlo_privacy,
)
from .mechanisms import (
    IntervalEstimate,
    MechanismOutput,
    MechanismParams,
    array_average_release,
    baseline_release,
    clip_release,
    concentration_tau,
    levy_release,
    private_interval,
    private_quantile,
    quantile_release,
    release,
    sample_laplace,
)
from .rng import RngStream, laplace_inverse_cdf
from .sensitivity import (
    GainReport,
    SensitivityReport,
    array_avg_sensitivity,
    brute_force_variance_sensitivity,
    clipped_mean_sensitivity,
    clipped_variance_sensitivity,
    gain_report,
    mean_sensitivity,
    variance_sensitivity,
)
from .synth import (
    SynthParams,
    ValueModel,
    generate_occupancy,
    generate_values,
    scale_occupancy,
)
from .worst_case_bias import (
    BiasReport,
    extremal_bias_dataset,
    mean_bias,
    variance_bias,
)

__all__ = [
    "ArrayGroup",
    "BiasReport",
    "ClipPlan",
    "ClipUserResult",
    "CurvePoint",
    "Dataset",
    "ErrorBudget",
    "ExperimentConfig",
    "GainReport",
    "GridDPError",
    "GridStats",
    "IntervalEstimate",
    "MechanismOutput",
    "MechanismParams",
    "OccupancyArray",
    "PseudoUserResult",
    "RngStream",
    "ScalingLawCheck",
    "SensitivityReport",
    "Suppression",
    "SynthParams",
    "ValueModel",
    "array_avg_sensitivity",
    "array_count_k",
    "array_means",
    "array_average_release",
    "baseline_release",
    "best_fit",
    "best_fit_count",
    "brute_force_variance_sensitivity",
    "check_scaling_laws",
    "clip_release",
    "clip_user",
    "clipped_mean_sensitivity",
    "clipped_variance_sensitivity",
    "concentration_tau",
    "extremal_bias_dataset",
    "gain_report",
    "generate_occupancy",
    "generate_values",
    "grid_error",
    "grid_stats",
    "laplace_inverse_cdf",
    "mae_eval",
    "mean_bias",
    "mean_sensitivity",
    "median_mub",
    "monte_carlo_error",
    "monte_carlo_privacy",
    "optimized_mub",
    "parse_dataset",
    "parse_occupancy",
    "population_stats",
    "post_release",
    "privacy_loss",
    "private_interval",
    "private_quantile",
    "pseudo_user_optimize",
    "quantile_release",
    "release",
    "sample_laplace",
    "scale_occupancy",
    "variance_bias",
    "variance_sensitivity",
    "wrap_around",
]
