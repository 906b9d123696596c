"""Group-relative advantages and gradient-vanishing diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractViolation


@dataclass(frozen=True)
class GroupAdvantage:
    rewards: tuple[int, ...]
    advantages: tuple[float, ...]
    degenerate: bool


def group_advantages(rewards: Sequence[int]) -> GroupAdvantage:
    """Standardize binary rewards within one group.

    Uses the population standard deviation. A group whose rewards are all
    equal gets all-zero advantages and ``degenerate=True``.
    """
    rewards = tuple(int(x) for x in rewards)
    if len(rewards) < 2:
        raise ContractViolation(f"a group needs at least 2 rewards, got {len(rewards)}")
    if any(x not in (0, 1) for x in rewards):
        raise ContractViolation("rewards must be 0 or 1")
    G = len(rewards)
    r = sum(rewards)
    if r == 0 or r == G:
        return GroupAdvantage(rewards, (0.0,) * G, True)
    mean = r / G
    std = math.sqrt(mean * (1.0 - mean))
    hi = (1.0 - mean) / std
    lo = -mean / std
    return GroupAdvantage(rewards, tuple(hi if x else lo for x in rewards), False)


def effective_ratio(outcomes) -> float:
    """Fraction of groups with mixed rewards (0 < r < G)."""
    if len(outcomes) == 0:
        raise ContractViolation("effective ratio of an empty batch is undefined")
    return sum(0 < o.r < o.G for o in outcomes) / len(outcomes)


def batch_signal_proxy(advantages: Sequence[GroupAdvantage]) -> float:
    """Root-mean-square of every advantage entry in the batch."""
    if len(advantages) == 0:
        raise ContractViolation("batch signal of an empty batch is undefined")
    flat = np.concatenate([np.asarray(a.advantages, dtype=float) for a in advantages])
    return float(np.sqrt(np.mean(flat * flat)))
