"""Optimal transport (access) times of finite Markov chains.

Build a chain, ask how long an optimal stopping rule needs on average to
carry one distribution into another, and cross-check the answer three
ways: the exact hitting-time solver, per-family closed forms with
bounds, and seeded Monte Carlo simulation of an explicit rule.
"""
from .access import (
    AccessResult,
    FamilyReport,
    GeneralBounds,
    VerifyResult,
    access_time,
    closed_form_bd,
    closed_form_complete,
    closed_form_path,
    closed_form_star,
    closed_form_ws,
    family_report,
    general_bounds,
    symmetric_walk_access,
    verify_family,
)
from .chains import (
    ChainDiagnostics,
    ChainSpec,
    ChainSpecError,
    DistSpec,
    MomentBundle,
    ProbabilityVector,
    ReducibleChainError,
    TransitionMatrix,
    build_chain,
    build_distribution,
    random_connected_graph,
    truncated_moments,
    validate_chain,
)
from .hitting import (
    HittingTimeMatrix,
    SpectralSummary,
    birth_death_hitting_formula,
    complete_hitting_formula,
    hitting_time_matrix,
    hitting_time_to,
    is_hitting_symmetric,
    kemeny_tav,
    max_hitting_time,
    path_hitting_formula,
    spectral_tav,
    star_hitting_formula,
    stationary_distribution,
    winning_streak_hitting_formula,
)
from .simulate import SimReport, sample_trajectory, simulate_rule, tv_distance

__version__ = "0.1.0"

__all__ = [
    "AccessResult",
    "ChainDiagnostics",
    "ChainSpec",
    "ChainSpecError",
    "DistSpec",
    "FamilyReport",
    "GeneralBounds",
    "HittingTimeMatrix",
    "MomentBundle",
    "ProbabilityVector",
    "ReducibleChainError",
    "SimReport",
    "SpectralSummary",
    "TransitionMatrix",
    "VerifyResult",
    "access_time",
    "birth_death_hitting_formula",
    "build_chain",
    "build_distribution",
    "closed_form_bd",
    "closed_form_complete",
    "closed_form_path",
    "closed_form_star",
    "closed_form_ws",
    "complete_hitting_formula",
    "family_report",
    "general_bounds",
    "hitting_time_matrix",
    "hitting_time_to",
    "is_hitting_symmetric",
    "kemeny_tav",
    "max_hitting_time",
    "path_hitting_formula",
    "random_connected_graph",
    "sample_trajectory",
    "simulate_rule",
    "spectral_tav",
    "star_hitting_formula",
    "stationary_distribution",
    "symmetric_walk_access",
    "truncated_moments",
    "tv_distance",
    "validate_chain",
    "verify_family",
    "winning_streak_hitting_formula",
]
