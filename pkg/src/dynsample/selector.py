"""Batch selection by information gain.

The asymmetric objective ``p (1 - p)^2`` peaks at p = 1/3 and so leans toward
harder samples. The symmetric ``p (1 - p)`` peaks at 1/2. Every strategy
takes the top ``B`` candidates by score. Equal scores go to the lower sample id.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, NamedTuple

import numpy as np

from .errors import ConfigError, ContractViolation
from .estimator import EstimatorStore


class InfoGainObjective(str, Enum):
    ASYMMETRIC = "asym"
    SYMMETRIC = "sym"


STRATEGIES = ("thompson", "greedy", "random")


def info_gain(p, objective: InfoGainObjective | str = InfoGainObjective.ASYMMETRIC):
    """Expected single-step training gain of a sample with success probability ``p``.

    Accepts a scalar or an array; returns the same shape.
    """
    objective = InfoGainObjective(objective)
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise ContractViolation("success probability must lie in [0, 1]")
    q = 1.0 - arr
    out = arr * q * q if objective is InfoGainObjective.ASYMMETRIC else arr * q
    return float(out) if out.ndim == 0 else out


class SelectionEntry(NamedTuple):
    sample_id: int
    p_tilde: float | None
    score: float | None


@dataclass(frozen=True)
class BatchSelection:
    step: int
    ids: np.ndarray
    p_tilde: np.ndarray | None = None
    scores: np.ndarray | None = None

    @property
    def size(self) -> int:
        return int(self.ids.shape[0])

    def entries(self) -> Iterator[SelectionEntry]:
        for k, i in enumerate(self.ids):
            yield SelectionEntry(
                int(i),
                None if self.p_tilde is None else float(self.p_tilde[k]),
                None if self.scores is None else float(self.scores[k]),
            )


def _candidates(store_or_ids, candidates) -> np.ndarray:
    if candidates is not None:
        ids = np.asarray(candidates, dtype=np.int64)
    elif isinstance(store_or_ids, EstimatorStore):
        ids = store_or_ids.ids
    else:
        ids = np.asarray(store_or_ids, dtype=np.int64)
    if np.unique(ids).size != ids.size:
        raise ContractViolation("candidate ids must be distinct")
    return ids


def _check_batch_size(B: int, n: int) -> None:
    if B < 1:
        raise ConfigError(f"batch size must be >= 1, got {B}")
    if B > n:
        raise ConfigError(f"batch size {B} exceeds the {n} available samples")


def top_b(ids: np.ndarray, scores: np.ndarray, B: int) -> np.ndarray:
    """Positions of the ``B`` highest scores; ties broken by ascending id."""
    order = np.lexsort((ids, -scores))
    return order[:B]


def _select_by_estimate(ids, estimates, B, objective, step) -> BatchSelection:
    scores = info_gain(estimates, objective)
    pos = top_b(ids, scores, B)
    return BatchSelection(step, ids[pos], estimates[pos], scores[pos])


def select_thompson(store: EstimatorStore, B: int, objective="asym", rng=None, *,
                    candidates=None, step: int = 0, point_mass: bool = False) -> BatchSelection:
    """Draw one posterior sample per candidate and keep the top ``B`` by score.

    ``rng`` is a numpy Generator or a :class:`~dynsample.substreams.SubstreamRNG`.
    ``point_mass=True`` replaces every posterior with a point mass at its raw
    mean, which makes the result coincide with :func:`select_greedy`.
    """
    ids = _candidates(store, candidates)
    _check_batch_size(B, ids.size)
    if point_mass:
        draws = store.raw_means(ids)
    else:
        if rng is None:
            raise ContractViolation("thompson selection needs an explicitly seeded rng")
        draws = store.draw(rng, ids, step=step)
    return _select_by_estimate(ids, draws, B, objective, step)


def select_greedy(store: EstimatorStore, B: int, objective="asym", *,
                  candidates=None, step: int = 0) -> BatchSelection:
    """Score each candidate at its raw mean alpha / (alpha + beta)."""
    ids = _candidates(store, candidates)
    _check_batch_size(B, ids.size)
    return _select_by_estimate(ids, store.raw_means(ids), B, objective, step)


def select_random(ids, B: int, rng: np.random.Generator, *, step: int = 0) -> BatchSelection:
    """Uniform choice of ``B`` ids without replacement."""
    ids = _candidates(ids, None)
    _check_batch_size(B, ids.size)
    chosen = rng.choice(ids, size=B, replace=False)
    return BatchSelection(step, np.asarray(chosen, dtype=np.int64))
