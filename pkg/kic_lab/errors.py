"""Exceptions raised by the kic_lab package."""

from typing import List, Optional


class KicLabError(Exception):
    """Base class for all kic_lab errors."""


class ConfigError(KicLabError, ValueError):
    """Invalid scenario, channel or experiment configuration."""

    def __init__(self, message: str, violations: Optional[List[str]] = None):
        self.violations = list(violations) if violations else []
        if self.violations:
            message = f"{message}: " + "; ".join(self.violations)
        super().__init__(message)


class FeasibilityError(KicLabError, ValueError):
    """The convergence condition fails at a node, so no finite round count is guaranteed."""

    def __init__(self, node: int, message: Optional[str] = None):
        self.node = node
        super().__init__(message or f"Node {node} is infeasible: cancellation is not guaranteed to converge")


class ScheduleError(KicLabError, ValueError):
    """A slot or node outside the steady-state range of a schedule."""


class TermBudgetExceeded(KicLabError, ValueError):
    """A signal expression would grow beyond the configured term budget."""


class ConsistencyError(KicLabError, RuntimeError):
    """Two independent evaluations of the same quantity disagree."""
