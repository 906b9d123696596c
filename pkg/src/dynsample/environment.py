"""Simulated policy: ground-truth correctness probabilities that drift with training.

The simulator stands in for a policy being trained. Each sample has a true
probability of being answered correctly. A rollout group is ``G`` Bernoulli
draws at that probability. After a training step:

* a trained sample whose group had mixed rewards moves toward 1 by
  ``eta1 * (1 - p)``; a uniform group carries no gradient and leaves it alone;
* every untrained sample moves by ``eta2 * f * (1 - p) + noise``, where ``f``
  is the fraction of mixed-reward groups in the batch.

All values are clamped to [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ContractViolation


@dataclass(frozen=True)
class RolloutOutcome:
    sample_id: int
    G: int
    r: int

    def __post_init__(self):
        if self.G < 1:
            raise ContractViolation(f"group size must be >= 1, got {self.G}")
        if not 0 <= self.r <= self.G:
            raise ContractViolation(f"r={self.r} outside [0, {self.G}]")

    @property
    def degenerate(self) -> bool:
        return self.r == 0 or self.r == self.G

    def rewards(self) -> list[int]:
        return [1] * self.r + [0] * (self.G - self.r)


@dataclass
class EnvironmentState:
    true_p: np.ndarray
    learn_rate_sampled: float = 0.0
    learn_rate_transfer: float = 0.0
    noise_scale: float = 0.0
    rollout_rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    noise_rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(1))

    def __post_init__(self):
        self.true_p = np.clip(np.asarray(self.true_p, dtype=float), 0.0, 1.0)
        if min(self.learn_rate_sampled, self.learn_rate_transfer, self.noise_scale) < 0:
            raise ContractViolation("learning rates and noise scale must be >= 0")

    @property
    def n_samples(self) -> int:
        return self.true_p.shape[0]


def initial_probabilities(n_samples: int, init_dist: dict | None, rng: np.random.Generator) -> np.ndarray:
    """Draw starting correctness probabilities.

    ``init_dist`` is ``{"kind": "beta", "a": .., "b": ..}`` (default
    Beta(0.6, 1.2)), ``{"kind": "uniform"}`` or ``{"kind": "constant", "value": ..}``.
    """
    dist = dict(init_dist or {"kind": "beta", "a": 0.6, "b": 1.2})
    kind = dist.get("kind", "beta")
    if kind == "beta":
        return rng.beta(float(dist.get("a", 0.6)), float(dist.get("b", 1.2)), size=n_samples)
    if kind == "uniform":
        return rng.uniform(0.0, 1.0, size=n_samples)
    if kind == "constant":
        value = float(dist["value"])
        if not 0.0 <= value <= 1.0:
            raise ContractViolation(f"constant init probability {value} outside [0, 1]")
        return np.full(n_samples, value)
    raise ContractViolation(f"unknown init_dist kind {kind!r}")


def make_environment(n_samples: int, eta1: float = 0.0, eta2: float = 0.0, noise: float = 0.0,
                     init_dist: dict | None = None, seed: int = 0) -> EnvironmentState:
    init_ss, rollout_ss, noise_ss = np.random.SeedSequence(seed).spawn(3)
    p0 = initial_probabilities(n_samples, init_dist, np.random.default_rng(init_ss))
    return EnvironmentState(
        true_p=p0,
        learn_rate_sampled=eta1,
        learn_rate_transfer=eta2,
        noise_scale=noise,
        rollout_rng=np.random.default_rng(rollout_ss),
        noise_rng=np.random.default_rng(noise_ss),
    )


def rollout(env: EnvironmentState, sample_id: int, G: int) -> RolloutOutcome:
    if G < 1:
        raise ContractViolation(f"group size must be >= 1, got {G}")
    if not 0 <= sample_id < env.n_samples:
        raise KeyError(f"unknown sample id {sample_id}")
    r = int(env.rollout_rng.binomial(G, env.true_p[sample_id]))
    return RolloutOutcome(int(sample_id), G, r)


def rollout_many(env: EnvironmentState, ids: Sequence[int], G: int) -> list[RolloutOutcome]:
    """One group of ``G`` rollouts for each id, in order."""
    ids = np.asarray(ids, dtype=np.int64)
    if G < 1:
        raise ContractViolation(f"group size must be >= 1, got {G}")
    if ids.size and (ids.min() < 0 or ids.max() >= env.n_samples):
        raise KeyError("rollout requested for an unknown sample id")
    r = env.rollout_rng.binomial(G, env.true_p[ids])
    return [RolloutOutcome(int(i), G, int(k)) for i, k in zip(ids, r)]


def apply_training_update(env: EnvironmentState, batch,
                          outcomes: Sequence[RolloutOutcome]) -> EnvironmentState:
    """Advance the simulated policy by one training step.

    ``batch`` is a :class:`~dynsample.selector.BatchSelection` or a plain
    sequence of sample ids; ``outcomes`` must list the same ids in order.
    """
    batch_ids = np.asarray(getattr(batch, "ids", batch), dtype=np.int64)
    if len(outcomes) != batch_ids.size or any(
            o.sample_id != i for o, i in zip(outcomes, batch_ids)):
        raise ContractViolation("outcomes must correspond one-to-one with the batch ids")
    if batch_ids.size == 0:
        raise ContractViolation("training batch is empty")

    p = env.true_p
    informative = np.fromiter((not o.degenerate for o in outcomes), dtype=bool, count=len(outcomes))
    f = float(informative.mean())

    trained = np.zeros(env.n_samples, dtype=bool)
    trained[batch_ids] = True
    # Drawn for every sample so the noise stream advances identically across strategies.
    eps = env.noise_scale * env.noise_rng.standard_normal(env.n_samples)

    new_p = p.copy()
    untrained = ~trained
    new_p[untrained] = p[untrained] + env.learn_rate_transfer * f * (1.0 - p[untrained]) + eps[untrained]
    learners = batch_ids[informative]
    new_p[learners] = p[learners] + env.learn_rate_sampled * (1.0 - p[learners])
    env.true_p = np.clip(new_p, 0.0, 1.0)
    return env


def validation_proxy(env: EnvironmentState, heldout_ids: Sequence[int]) -> float:
    """Mean true correctness probability over the held-out ids."""
    heldout_ids = np.asarray(heldout_ids, dtype=np.int64)
    if heldout_ids.size == 0:
        raise ContractViolation("held-out set is empty")
    return float(env.true_p[heldout_ids].mean())
