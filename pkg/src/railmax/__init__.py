"""railmax: exact optimization and what-if analysis for budgeted
prize-collecting route selection on railway boards."""

from .board import (
    Board,
    BoardValidationError,
    City,
    Edge,
    EdgeSubset,
    ScoreBreakdown,
    Ticket,
    completed_tickets,
    load_board,
    score,
    total_length,
    validate_board,
)
from .solver import (
    BudgetInfeasibleForcedSet,
    GameState,
    InstanceTooLarge,
    SearchNode,
    SolveResult,
    SolveStats,
    brute_force,
    reachable_tickets,
    removal_impact,
    solve,
    solve_partial,
    upper_bound,
)

__version__ = "0.1.0"

__all__ = [
    "Board",
    "BoardValidationError",
    "BudgetInfeasibleForcedSet",
    "City",
    "Edge",
    "EdgeSubset",
    "GameState",
    "InstanceTooLarge",
    "ScoreBreakdown",
    "SearchNode",
    "SolveResult",
    "SolveStats",
    "Ticket",
    "brute_force",
    "completed_tickets",
    "load_board",
    "reachable_tickets",
    "removal_impact",
    "score",
    "solve",
    "solve_partial",
    "total_length",
    "upper_bound",
    "validate_board",
]
