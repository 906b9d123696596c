"""Exception types raised across the package."""

from __future__ import annotations


class ContractViolation(ValueError):
    """An argument broke an operation's precondition."""


class ConfigError(ValueError):
    """An experiment configuration is invalid."""


class InitializationError(ValueError):
    """Estimator initialization saw a missing or duplicate sample id."""

    def __init__(self, message: str, sample_id: int):
        super().__init__(message)
        self.sample_id = sample_id


class BudgetExhausted(RuntimeError):
    """The rollout budget ran out before a batch could be assembled.

    ``partial`` holds the outcomes collected so far and ``budget`` the
    budget state at the moment of exhaustion.
    """

    def __init__(self, message: str, partial, budget):
        super().__init__(message)
        self.partial = partial
        self.budget = budget
