"""Randomized experiment designs that minimize distributional discrepancy.

Builds +-1 treatment-assignment distributions with prescribed (possibly
unequal) marginal probabilities while keeping the worst-case covariance
``||Cov(B z)||`` of a linear statistic small: a multiplicative-weights
outer loop (:mod:`~ddmdesign.mwu`) around a martingale walk oracle
(:mod:`~ddmdesign.oracle`), classical benchmark designs and a shared
estimator interface (:mod:`~ddmdesign.designs`), treatment-effect
estimation utilities (:mod:`~ddmdesign.estimation`), set-splitting gadget
constructions with exact verifiers (:mod:`~ddmdesign.hardness`), data
generation and ingestion (:mod:`~ddmdesign.data`), and a reproducible
command-line harness (:mod:`~ddmdesign.cli`).
"""

from .data import (
    OUTCOME_KINDS,
    OutcomeModel,
    gen_covariates,
    gen_outcomes,
    gen_random_matrix,
    ingest_covariate_csv,
)
from .designs import (
    BernoulliDesign,
    CompleteRandomization,
    GramSchmidtWalk,
    MWUDesign,
    RandomizedBlockDesign,
    Rerandomization,
    bernoulli_sample,
    complete_randomization_sample,
    gsw_sample,
    randomized_block_sample,
    rerandomization_sample,
)
from .errors import (
    AcceptanceStallError,
    CsvParseError,
    DDMDesignError,
    DegenerateStateError,
    FileFormatError,
    InvalidInputError,
    InvalidWitnessError,
    NumericalError,
    RunawayWalkError,
    StalledWalkError,
    StandardizationError,
    UnsupportedDesignError,
)
from .estimation import (
    ExperimentInstance,
    ate,
    balance_robustness_bounds,
    ht_estimate,
    ht_replicates,
    mse_closed_form,
    mse_monte_carlo,
    ridge_variance_bound,
)
from .hardness import (
    AtomicDistribution,
    EqualProbGadget,
    SetSplittingInstance,
    UnequalProbGadget,
    build_equal_gadget,
    build_unequal_gadget,
    equal_gadget_zero_design,
    exhaustive_min_unsplit,
    format_set_splitting,
    parse_set_splitting,
    random_planted_instance,
    satisfiable_distribution,
    sign_completion,
    unsplit_count,
)
from .linalg import (
    build_augmented_matrix,
    empirical_covariance,
    matrix_exponential,
    normalize_columns,
    operator_norm,
)
from .mwu import (
    DesignDistribution,
    MWUConfig,
    bernoulli_objective,
    ddm_objective,
    ddm_objective_with_stderr,
    mwu_build,
    mwu_sample,
    theoretical_balance_bound,
)
from .oracle import OracleConfig, oracle_sample

__version__ = "0.1.0"

__all__ = [
    "AcceptanceStallError",
    "AtomicDistribution",
    "BernoulliDesign",
    "CompleteRandomization",
    "CsvParseError",
    "DDMDesignError",
    "DegenerateStateError",
    "DesignDistribution",
    "EqualProbGadget",
    "ExperimentInstance",
    "FileFormatError",
    "GramSchmidtWalk",
    "InvalidInputError",
    "InvalidWitnessError",
    "MWUConfig",
    "MWUDesign",
    "NumericalError",
    "OUTCOME_KINDS",
    "OracleConfig",
    "OutcomeModel",
    "RandomizedBlockDesign",
    "Rerandomization",
    "RunawayWalkError",
    "SetSplittingInstance",
    "StalledWalkError",
    "StandardizationError",
    "UnequalProbGadget",
    "UnsupportedDesignError",
    "ate",
    "balance_robustness_bounds",
    "bernoulli_objective",
    "bernoulli_sample",
    "build_augmented_matrix",
    "build_equal_gadget",
    "build_unequal_gadget",
    "complete_randomization_sample",
    "ddm_objective",
    "ddm_objective_with_stderr",
    "empirical_covariance",
    "equal_gadget_zero_design",
    "exhaustive_min_unsplit",
    "format_set_splitting",
    "gen_covariates",
    "gen_outcomes",
    "gen_random_matrix",
    "gsw_sample",
    "ht_estimate",
    "ht_replicates",
    "ingest_covariate_csv",
    "matrix_exponential",
    "mse_closed_form",
    "mse_monte_carlo",
    "mwu_build",
    "mwu_sample",
    "normalize_columns",
    "operator_norm",
    "oracle_sample",
    "parse_set_splitting",
    "random_planted_instance",
    "randomized_block_sample",
    "rerandomization_sample",
    "ridge_variance_bound",
    "satisfiable_distribution",
    "sign_completion",
    "theoretical_balance_bound",
    "unsplit_count",
]
