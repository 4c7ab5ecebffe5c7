"""Good's coverage estimator with moderate-deviation inference and a Monte Carlo harness."""

__version__ = "0.1.0"

from .population import (
    SpeciesProfile,
    exponential_profile,
    normalize_weights,
    power_law_profile,
    uniform_profile,
)
from .sampling import (
    CoverageStats,
    Occupancy,
    OccupancySummary,
    coverage_stats,
    draw_poissonized,
    draw_sample,
    summarize,
    zeta_statistic,
)
from .moments import (
    MomentSummary,
    expected_missing_mass,
    expected_occupancy,
    moment_summary,
    poisson_moment_approx,
    poisson_second_moment_s,
    variance_constant_b,
)
from .scaling import ScalingFunction, TailSchedule, mdp_speed, power_scaling, rate_function
from .inference import (
    ConfidenceInterval,
    TestDecision,
    coverage_test,
    oracle_ci,
    self_normalized_ci,
    two_population_test,
)
from .estimator import GoodCoverageEstimator

__all__ = [
    "ConfidenceInterval",
    "CoverageStats",
    "GoodCoverageEstimator",
    "MomentSummary",
    "Occupancy",
    "OccupancySummary",
    "ScalingFunction",
    "SpeciesProfile",
    "TailSchedule",
    "TestDecision",
    "coverage_stats",
    "coverage_test",
    "draw_poissonized",
    "draw_sample",
    "expected_missing_mass",
    "expected_occupancy",
    "exponential_profile",
    "mdp_speed",
    "moment_summary",
    "normalize_weights",
    "oracle_ci",
    "poisson_moment_approx",
    "poisson_second_moment_s",
    "power_law_profile",
    "power_scaling",
    "rate_function",
    "self_normalized_ci",
    "summarize",
    "two_population_test",
    "uniform_profile",
    "zeta_statistic",
]
