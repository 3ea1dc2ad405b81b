"""Problem-specific sample-complexity lower bounds for linear system
identification, worst-case neighbor systems, and a seeded Monte Carlo
verification harness."""

from .core import (
    AccuracySpec,
    BoundReport,
    ConstantPolicy,
    ControlledSystem,
    ExternalPolicy,
    FeedbackPolicy,
    HorizonExhaustedError,
    InputError,
    IterationCapError,
    NumericalError,
    Policy,
    UncontrolledSystem,
    UnreachableBoundError,
    bernoulli_kl,
    confidence_gap_bound,
    confidence_gap_exact,
    matrix_from_json_dict,
    matrix_to_json_dict,
    rate_threshold,
)
from .spectral import (
    BlockDiagonalization,
    SchurBlock,
    SchurForm,
    block_diagonalize,
    eigenvalues_sorted,
    lambda_min_sym,
    schur_sorted,
)
from .uncontrolled import (
    ConfusingInstance,
    GramianAccumulator,
    SqrtInfoAccumulator,
    check_confusing_gap,
    confusing_gramian,
    confusing_schur,
    cumulative_info,
    expected_llr,
    gramian,
    gramian_sum,
    info_growth,
    sample_complexity_gramian,
    sample_complexity_spectral,
)
from .controlled import (
    InputDesignResult,
    JointMoment,
    design_constant_input,
    joint_moment_exact,
    joint_moment_mc,
    sample_complexity_controlled,
    sample_complexity_scalar_constant,
    scalar_excitation_sums,
    scalar_info_matrix,
    scalar_lambda_min,
)
from .sim import (
    EmpiricalComplexity,
    PRNG_ID,
    Trajectory,
    empirical_sample_complexity,
    ols_controlled,
    ols_uncontrolled,
    simulate_controlled,
    simulate_uncontrolled,
    substream_seed,
    tightness_report,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracySpec",
    "BlockDiagonalization",
    "BoundReport",
    "ConfusingInstance",
    "ConstantPolicy",
    "ControlledSystem",
    "EmpiricalComplexity",
    "ExternalPolicy",
    "FeedbackPolicy",
    "GramianAccumulator",
    "HorizonExhaustedError",
    "InputDesignResult",
    "InputError",
    "IterationCapError",
    "JointMoment",
    "NumericalError",
    "PRNG_ID",
    "Policy",
    "SchurBlock",
    "SchurForm",
    "SqrtInfoAccumulator",
    "Trajectory",
    "UncontrolledSystem",
    "UnreachableBoundError",
    "bernoulli_kl",
    "block_diagonalize",
    "check_confusing_gap",
    "confidence_gap_bound",
    "confidence_gap_exact",
    "confusing_gramian",
    "confusing_schur",
    "cumulative_info",
    "design_constant_input",
    "eigenvalues_sorted",
    "empirical_sample_complexity",
    "expected_llr",
    "gramian",
    "gramian_sum",
    "info_growth",
    "joint_moment_exact",
    "joint_moment_mc",
    "lambda_min_sym",
    "matrix_from_json_dict",
    "matrix_to_json_dict",
    "ols_controlled",
    "ols_uncontrolled",
    "rate_threshold",
    "sample_complexity_controlled",
    "sample_complexity_gramian",
    "sample_complexity_scalar_constant",
    "sample_complexity_spectral",
    "scalar_excitation_sums",
    "scalar_info_matrix",
    "scalar_lambda_min",
    "schur_sorted",
    "simulate_controlled",
    "simulate_uncontrolled",
    "substream_seed",
    "tightness_report",
]
