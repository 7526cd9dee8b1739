"""Tools for non-stationary Markov observables: exact moments, mixing
coefficients, variance-balanced block partitions, and simulation diagnostics."""

__version__ = "0.1.0"

from .chain import (
    ChainConfigError,
    ChainSpec,
    EllipticityReport,
    ExplicitKernels,
    JointLaw,
    MixtureKernels,
    ObservableSchedule,
    PeriodicKernels,
    build_chain,
    check_uniform_ellipticity,
    pair_joint,
)
from .moments import (
    EigenRatioReport,
    LpNorm,
    MomentEngine,
    SupportOverflow,
    cov_pair,
    cov_partial_sum,
    eigen_ratio_report,
    engine_for,
    lp_norm_partial_sum,
    mean_obs,
    s_value,
)
from .balance import (
    SandwichFit,
    balance_variance,
    chain_segment_hexagon_law,
    node_pair_observable,
    verify_var2_sandwich,
)
from .mixing import (
    ConditionHProfile,
    Envelope,
    MixingReport,
    alpha_phi,
    alpha_phi_windowed,
    condition_h_gap,
    condition_h_profile,
    dobrushin_coefficient,
    fit_envelope,
    mixing_report,
    rho_coefficient,
)
from .blocks import (
    BlockPartition,
    BlockVerification,
    CovInequality,
    PartitionPlan,
    TailStats,
    VarianceStarvedError,
    build_blocks,
    compute_q,
    covariance_inequality_check,
    plan_partition,
    q_of_amplitude,
    select_amplitude,
    select_separation,
    tail_statistics,
    verify_partition,
)
from .simulate import (
    KsCurve,
    LilReport,
    PathBatch,
    RateCurve,
    SurrogateBatch,
    VarianceMatchCurve,
    clt_diagnostic,
    gaussian_surrogate,
    ks_statistic,
    lil_diagnostic,
    rate_scaling_diagnostic,
    sample_paths,
    variance_matching_diagnostic,
    w1_to_gaussian,
    w1_two_sample,
)
from .battery import BatteryEntry, battery, battery_chain, entry
from .verify import CheckResult, VerifyReport, run_verification, verify_chain

__all__ = [
    "ChainConfigError",
    "ChainSpec",
    "EllipticityReport",
    "ExplicitKernels",
    "JointLaw",
    "MixtureKernels",
    "ObservableSchedule",
    "PeriodicKernels",
    "build_chain",
    "check_uniform_ellipticity",
    "pair_joint",
    "EigenRatioReport",
    "LpNorm",
    "MomentEngine",
    "SupportOverflow",
    "cov_pair",
    "cov_partial_sum",
    "eigen_ratio_report",
    "engine_for",
    "lp_norm_partial_sum",
    "mean_obs",
    "s_value",
    "SandwichFit",
    "balance_variance",
    "chain_segment_hexagon_law",
    "node_pair_observable",
    "verify_var2_sandwich",
    "ConditionHProfile",
    "Envelope",
    "MixingReport",
    "alpha_phi",
    "alpha_phi_windowed",
    "condition_h_gap",
    "condition_h_profile",
    "dobrushin_coefficient",
    "fit_envelope",
    "mixing_report",
    "rho_coefficient",
    "BlockPartition",
    "BlockVerification",
    "CovInequality",
    "PartitionPlan",
    "TailStats",
    "VarianceStarvedError",
    "build_blocks",
    "compute_q",
    "covariance_inequality_check",
    "plan_partition",
    "q_of_amplitude",
    "select_amplitude",
    "select_separation",
    "tail_statistics",
    "verify_partition",
    "KsCurve",
    "LilReport",
    "PathBatch",
    "RateCurve",
    "SurrogateBatch",
    "VarianceMatchCurve",
    "clt_diagnostic",
    "gaussian_surrogate",
    "ks_statistic",
    "lil_diagnostic",
    "rate_scaling_diagnostic",
    "sample_paths",
    "variance_matching_diagnostic",
    "w1_to_gaussian",
    "w1_two_sample",
    "BatteryEntry",
    "battery",
    "battery_chain",
    "entry",
    "CheckResult",
    "VerifyReport",
    "run_verification",
    "verify_chain",
    "__version__",
]
