"""Generate-then-filter batch assembly (DAPO-style dynamic sampling)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .environment import EnvironmentState, RolloutOutcome, rollout
from .errors import BudgetExhausted, ContractViolation

ATTEMPT_FACTOR = 3


@dataclass
class RolloutBudget:
    cap: int
    consumed: int = 0

    @property
    def remaining(self) -> int:
        return self.cap - self.consumed

    def charge(self, n: int) -> None:
        if n < 0:
            raise ContractViolation("cannot refund rollouts")
        if self.consumed + n > self.cap:
            raise ContractViolation(f"charging {n} rollouts would exceed the cap of {self.cap}")
        self.consumed += n


def dapo_fill_batch(env: EnvironmentState, ids, B: int, G: int, budget: RolloutBudget,
                    rng: np.random.Generator) -> tuple[list[RolloutOutcome], RolloutBudget]:
    """Roll out uniformly drawn candidates until ``B`` mixed-reward groups are kept.

    At most ``3 * B`` candidates are tried per call, drawn without replacement.
    If fewer than ``B`` groups survive, the batch is topped up with the most
    recently seen uniform-reward groups. Every candidate costs ``G`` rollouts.
    Raises :class:`BudgetExhausted` carrying the partial batch when the budget
    cannot pay for the next candidate.
    """
    ids = np.asarray(ids, dtype=np.int64)
    if B < 1 or G < 1:
        raise ContractViolation("batch size and group size must be >= 1")
    if B > ids.size:
        raise ContractViolation(f"batch size {B} exceeds the {ids.size} candidate samples")
    if budget.remaining < B * G:
        raise BudgetExhausted(
            f"budget has {budget.remaining} rollouts left, a batch needs at least {B * G}",
            [], budget)

    n_attempts = min(ATTEMPT_FACTOR * B, ids.size)
    order = rng.permutation(ids)[:n_attempts]
    kept: list[RolloutOutcome] = []
    rejected: list[RolloutOutcome] = []
    for i in order:
        if budget.remaining < G:
            raise BudgetExhausted("rollout budget exhausted mid-step", kept, budget)
        out = rollout(env, int(i), G)
        budget.charge(G)
        if out.degenerate:
            rejected.append(out)
        else:
            kept.append(out)
            if len(kept) == B:
                break
    missing = B - len(kept)
    if missing > 0:
        kept.extend(rejected[::-1][:missing])
    return kept, budget
