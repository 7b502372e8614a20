"""Coverage analysis for RF-powered IoT networks clustered around gateways."""

from .analysis import (
    CoverageQuery,
    TauSearchResult,
    energy_cov_overall,
    energy_cov_ppp,
    energy_coverage,
    joint_cov_overall,
    joint_cov_ppp,
    joint_coverage,
    optimal_tau,
    throughput,
)
from .distributions import (
    DistanceLaw,
    QuadratureError,
    QuadratureSpec,
    association_probabilities,
    integrate,
    upper_incomplete_gamma,
)
from .model import (
    ClusterModel,
    ConfigError,
    EnergyThresholdSpec,
    FixedEnergyThreshold,
    MaternCluster,
    RateLinkedEnergyThreshold,
    SystemConfig,
    ThomasCluster,
    c_of_tau,
    e_rec_at,
    overall_mixture,
    prob_gw_at_center,
    validate_config,
)
from .montecarlo import (
    EstimationError,
    EstimatorResult,
    Realization,
    SeedSpec,
    estimate,
    simulate_tally,
)

__version__ = "0.1.0"
