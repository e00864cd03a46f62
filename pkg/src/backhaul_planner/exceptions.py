"""Exception types shared across the planners."""

from __future__ import annotations


class PlanningError(Exception):
    """Base class for planner failures."""


class InfeasibleError(PlanningError):
    """No plan satisfies the requested constraints."""


class NeighborLimitError(PlanningError):
    """A candidate-neighbor set exceeded the configured cap.

    Raised instead of silently enumerating an exponentially large local
    search space; the caller should switch to a tighter neighbor policy
    (e.g. ``knn:<k>``) or raise the cap deliberately.
    """


class BudgetExhaustedError(PlanningError):
    """A search budget ran out before any feasible solution was found."""
