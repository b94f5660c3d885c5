"""Online aggregation of probabilistic (CDF) forecasts under the CRPS loss.

Experts submit cumulative distribution functions on a bounded interval; the
aggregator merges them each round with either the aggregating substitution
rule or a weighted average, tracks exponentially updated weights with
optional Fixed Share mixing and per-expert confidence levels, and records
losses and regrets against worst-case bounds.
"""

from .aggregation import (
    AggregatorConfig,
    AggregatorState,
    AllExpertsAsleep,
    fixed_share,
    normalized_weights,
    observe,
    step,
    substitute_aa,
    substitute_wa,
    superprediction_check,
    superprediction_slacks,
    update_weights,
)
from .distributions import (
    GridCdf,
    GridDomain,
    PointMass,
    Triangular,
    TruncatedGaussianMixture,
    Uniform,
    crps,
    crps_at_grid_outcomes,
    crps_refined,
    discretize,
    heaviside_grid,
    parse_distribution,
)
from .estimator import CRPSAggregator
from .regret import (
    BoundReport,
    BoundScopeError,
    RegretLedger,
    RoundRecord,
    RunSettings,
    cumulative_regret,
    discounted_regret,
    theoretical_bound,
    verify_bounds,
)
from .synthetic import (
    MixtureScenario,
    build_expert_pool,
    default_components,
    sample_sequence,
    schedule_method1,
    schedule_method2,
    segment_leaders,
    weight_schedule,
)

__version__ = "0.1.0"

__all__ = [
    "AggregatorConfig",
    "AggregatorState",
    "AllExpertsAsleep",
    "BoundReport",
    "BoundScopeError",
    "CRPSAggregator",
    "GridCdf",
    "GridDomain",
    "MixtureScenario",
    "PointMass",
    "RegretLedger",
    "RoundRecord",
    "RunSettings",
    "Triangular",
    "TruncatedGaussianMixture",
    "Uniform",
    "build_expert_pool",
    "crps",
    "crps_at_grid_outcomes",
    "crps_refined",
    "cumulative_regret",
    "default_components",
    "discounted_regret",
    "discretize",
    "fixed_share",
    "heaviside_grid",
    "normalized_weights",
    "observe",
    "parse_distribution",
    "sample_sequence",
    "schedule_method1",
    "schedule_method2",
    "segment_leaders",
    "step",
    "substitute_aa",
    "substitute_wa",
    "superprediction_check",
    "superprediction_slacks",
    "theoretical_bound",
    "update_weights",
    "verify_bounds",
    "weight_schedule",
]
