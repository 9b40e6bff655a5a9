"""Exception hierarchy shared across the package."""


class ContactPlanError(Exception):
    """Base class for all package-specific errors."""


class UnbalancedStateError(ContactPlanError):
    """The robot cannot be statically supported (ground reaction not upward)."""


class DegenerateGraspError(ContactPlanError):
    """The two grasp points coincide; the object wrench cannot be distributed."""


class InfeasibleStepError(ContactPlanError):
    """A QP subproblem stayed infeasible even after elastic relaxation."""


class ReachabilityError(ContactPlanError):
    """A waypoint lies outside the arms' reachable workspace."""

    def __init__(self, message: str, waypoint_index: int | None = None):
        super().__init__(message)
        self.waypoint_index = waypoint_index


class PlanStepError(ContactPlanError):
    """A planning step failed; carries diagnostics and the partial trace."""

    def __init__(self, message: str, waypoint_index: int | None = None,
                 diagnostics: dict | None = None, partial_steps: list | None = None):
        super().__init__(message)
        self.waypoint_index = waypoint_index
        self.diagnostics = diagnostics or {}
        self.partial_steps = partial_steps or []


class ScenarioError(ContactPlanError):
    """A scenario file failed to parse or validate."""
