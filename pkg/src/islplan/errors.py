"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration problems exit 2,
proven-infeasible scheduling problems exit 3, and solver resource limits that
end without any incumbent exit 4.
"""

from __future__ import annotations


class IslPlanError(Exception):
    """Base class for all package errors."""


class ScenarioError(IslPlanError):
    """Invalid scenario file, parameters, or run configuration."""


class CapabilityError(IslPlanError):
    """A scheduler was asked for something it cannot provide by design."""


class InfeasibleError(IslPlanError):
    """The superframe model admits no feasible assignment.

    ``diagnostics`` names the constraint families implicated, when known.
    """

    def __init__(self, message: str, diagnostics: list[str] | None = None,
                 fsa_index: int | None = None, superframe: int | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []
        self.fsa_index = fsa_index
        self.superframe = superframe


class SolverLimitError(IslPlanError):
    """Time or node limit reached before any incumbent solution was found."""

    def __init__(self, message: str, fsa_index: int | None = None,
                 superframe: int | None = None):
        super().__init__(message)
        self.fsa_index = fsa_index
        self.superframe = superframe


class ConvergenceError(IslPlanError):
    """An iterative numerical routine failed to reach its tolerance."""
