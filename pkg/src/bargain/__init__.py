"""Equilibrium engine for bilateral multi-issue bargaining with deadlines.

Two agents split a set of shrinking pies under the alternating-offers
protocol, with a hard deadline, per-issue discounting, and five information
settings (complete information, symmetric or asymmetric uncertainty about
the opponent's issue weights, each with independent or interdependent
issues).  The package computes equilibrium strategies for the package-deal,
simultaneous, and sequential procedures, simulates equilibrium play, and
ships brute-force oracles that certify the exact solvers on small instances.
"""

from .model import (
    BeliefState,
    EmptySupportError,
    Package,
    Scenario,
    TypeSpace,
    ValidationError,
    cumulative_utility,
    effective_weights,
    make_package,
    pie_size,
    validate_scenario,
)
from .tradeoff import (
    EnumerationCapError,
    InfeasibleTargetError,
    TieGroupAnalysis,
    TradeoffProblem,
    enumerate_optimal_packages,
    select_by_expected_utility,
    solve_tradeoff,
    tie_groups,
)
from .complete import (
    CIEquilibrium,
    backward_induction_ci,
    condition_c1,
    condition_c2,
    is_pareto_optimal,
    single_issue_equilibrium,
)
from .tables import (
    EUTables,
    OffEquilibriumError,
    acceptance_decision,
    compute_eu_tables,
    condition_c3,
    condition_c4,
    condition_c5,
    terminal_eu,
    update_beliefs_offerer,
    update_beliefs_receiver,
)
from .procedures import (
    ComparisonReport,
    NegotiationOutcome,
    agreement_time_bounds,
    compare_procedures,
    expected_utilities,
    run_package_deal,
    run_sequential,
    run_simultaneous,
)
from .oracle import (
    GridSpec,
    brute_force_equilibrium_ci,
    brute_force_opt_choice,
    brute_force_pareto,
    brute_force_tradeoff,
)

__version__ = "0.1.0"

__all__ = [
    "BeliefState", "EmptySupportError", "Package", "Scenario", "TypeSpace",
    "ValidationError", "cumulative_utility", "effective_weights",
    "make_package", "pie_size", "validate_scenario",
    "EnumerationCapError", "InfeasibleTargetError", "TieGroupAnalysis",
    "TradeoffProblem", "enumerate_optimal_packages",
    "select_by_expected_utility", "solve_tradeoff", "tie_groups",
    "CIEquilibrium", "backward_induction_ci", "condition_c1", "condition_c2",
    "is_pareto_optimal", "single_issue_equilibrium",
    "EUTables", "OffEquilibriumError", "acceptance_decision",
    "compute_eu_tables", "condition_c3", "condition_c4", "condition_c5",
    "terminal_eu", "update_beliefs_offerer", "update_beliefs_receiver",
    "ComparisonReport", "NegotiationOutcome", "agreement_time_bounds",
    "compare_procedures", "expected_utilities", "run_package_deal",
    "run_sequential", "run_simultaneous",
    "GridSpec", "brute_force_equilibrium_ci", "brute_force_opt_choice",
    "brute_force_pareto", "brute_force_tradeoff",
]
