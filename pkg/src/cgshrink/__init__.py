"""Shrinkage estimation of a mean vector under conditionally Gaussian noise."""

__version__ = "0.1.0"

from .constants import (
    CompactSetSpec,
    GammaMethod,
    GammaPValue,
    ShrinkageConstant,
    ShrinkSource,
    chi_mean,
    eq6_constant,
    gamma_p,
    gamma_p_closed,
    gamma_p_quadrature,
    integral_I,
    risk_at_zero,
    risk_improvement_bound,
    shrink_constant_theorem21,
)
from .errors import (
    DimensionTooSmallError,
    DivergentIntegralError,
    DomainError,
    NonStationaryError,
    NotPSDError,
    SingularObservationError,
    SingularRateError,
)
from .estimators import (
    Estimate,
    EstimatorId,
    apply_estimator,
    estimate_james_stein,
    estimate_mle,
    estimate_shrink,
)
from .gaussian_models import (
    Ar1Spec,
    FixedCovariance,
    ScaledIdentity,
    ar1_covariance,
    ar1_lambda_max_bound,
    ar1_risk_bound,
    ar1_shrink_constant,
    sample_conditionally_gaussian,
    sample_mvn,
)
from .ou_levy import (
    ConditionalCovariance,
    JumpRecord,
    OuLevyModel,
    conditional_covariance,
    improved_estimator_ou,
    lse,
    ou_compact_spec,
    ou_risk_bound,
    ou_shrink_constant,
    simulate_jumps,
    simulate_zeta,
    simulate_zeta_unconditional,
)
from .risk_lab import (
    DominanceReport,
    EstimatorSpec,
    ExperimentConfig,
    RiskEstimate,
    derive_replicate_seed,
    dominance_report,
    estimate_risk,
    make_theta_grid,
)
