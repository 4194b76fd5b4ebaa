"""Fit Gibbs states exp(sum_i theta_i T_i)/Z to expectation targets and
qubit marginals by convex minimization of the log-partition function."""

from .linalg import (
    as_density,
    as_hermitian,
    eigh,
    expm_directional_derivative,
    frobenius_norm,
    hilbert_schmidt_inner,
    log_trace_exp,
    matrix_exp,
    partial_trace,
    psd_modulus,
    psd_power,
    trace_distance,
    von_neumann_entropy,
)
from .partition import GibbsState, ObservableSet, gibbs_state, gradient, hessian, log_partition
from .pauli import (
    PauliExpansion,
    PauliString,
    expand,
    marginal_from_expectations,
    materialize,
    parse_label,
    reconstruct,
)
from .problem import (
    CompatibilityReport,
    EntropyViolation,
    ExpectationProblem,
    IncompatibleMarginalsError,
    MarginalProblem,
    RankReport,
    TargetConflictError,
    check_independence,
    check_local_compatibility,
    entropy_diagnostic,
    reduce_to_expectations,
    translate_to_zero,
)
from .solver import (
    BOUNDARY,
    CONVERGED,
    ITERATION_LIMIT,
    DependentObservablesError,
    SolveOptions,
    SolveResult,
    VerificationReport,
    decompose_local_terms,
    solve_expectations,
    solve_marginals,
    verify,
)

__version__ = "0.1.0"

__all__ = [
    "BOUNDARY",
    "CONVERGED",
    "ITERATION_LIMIT",
    "CompatibilityReport",
    "DependentObservablesError",
    "EntropyViolation",
    "ExpectationProblem",
    "GibbsState",
    "IncompatibleMarginalsError",
    "MarginalProblem",
    "ObservableSet",
    "PauliExpansion",
    "PauliString",
    "RankReport",
    "SolveOptions",
    "SolveResult",
    "TargetConflictError",
    "VerificationReport",
    "as_density",
    "as_hermitian",
    "check_independence",
    "check_local_compatibility",
    "decompose_local_terms",
    "eigh",
    "entropy_diagnostic",
    "expand",
    "expm_directional_derivative",
    "frobenius_norm",
    "gibbs_state",
    "gradient",
    "hessian",
    "hilbert_schmidt_inner",
    "log_partition",
    "log_trace_exp",
    "marginal_from_expectations",
    "materialize",
    "matrix_exp",
    "parse_label",
    "partial_trace",
    "psd_modulus",
    "psd_power",
    "reconstruct",
    "reduce_to_expectations",
    "solve_expectations",
    "solve_marginals",
    "trace_distance",
    "translate_to_zero",
    "verify",
    "von_neumann_entropy",
]
