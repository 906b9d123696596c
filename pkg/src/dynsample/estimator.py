"""Per-sample Beta posterior statistics with two-scale prior decay.

Each sample keeps decayed counts ``alpha`` (correct responses) and ``beta``
(incorrect responses). Draws and the posterior mean use Beta(alpha+1, beta+1),
so a sample with no history is uniform on (0, 1).

When a sample is trained on, its counts shrink by the fast rate ``lambda1``
before the new group outcome is added; every other sample shrinks by the slow
rate ``lambda2``. The ``last-update`` mode replaces the counts with the latest
outcome and leaves unsampled samples untouched.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractViolation, InitializationError
from .substreams import SubstreamRNG

TWO_SCALE = "two-scale-decay"
LAST_UPDATE = "last-update"
_MODE_ALIASES = {"two-scale-decay": TWO_SCALE, "two-scale": TWO_SCALE, "last-update": LAST_UPDATE}


def normalize_mode(mode: str) -> str:
    try:
        return _MODE_ALIASES[mode]
    except KeyError:
        raise ContractViolation(
            f"unknown estimator mode {mode!r}; expected one of {sorted(_MODE_ALIASES)}"
        ) from None


@dataclass(frozen=True)
class SampleStats:
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ContractViolation(f"{name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class DecayConfig:
    lambda1: float = 0.2
    lambda2: float = 0.999

    def __post_init__(self):
        if not 0.0 < self.lambda1 < self.lambda2 < 1.0:
            raise ContractViolation(
                f"need 0 < lambda1 < lambda2 < 1, got lambda1={self.lambda1}, lambda2={self.lambda2}"
            )


def _check_count(r: int, G: int) -> None:
    if G < 1:
        raise ContractViolation(f"group size must be >= 1, got {G}")
    if not 0 <= r <= G:
        raise ContractViolation(f"success count r={r} outside [0, {G}]")


def update_sampled(stats: SampleStats, r: int, G: int, decay: DecayConfig,
                   mode: str = TWO_SCALE) -> SampleStats:
    """Fold one group outcome (r correct out of G) into a trained sample's counts."""
    _check_count(r, G)
    if normalize_mode(mode) == LAST_UPDATE:
        return SampleStats(float(r), float(G - r))
    return SampleStats(decay.lambda1 * stats.alpha + r, decay.lambda1 * stats.beta + (G - r))


def update_unsampled(stats: SampleStats, decay: DecayConfig, mode: str = TWO_SCALE) -> SampleStats:
    if normalize_mode(mode) == LAST_UPDATE:
        return stats
    return SampleStats(decay.lambda2 * stats.alpha, decay.lambda2 * stats.beta)


def posterior_mean(stats: SampleStats) -> float:
    """Mean of Beta(alpha+1, beta+1)."""
    return (stats.alpha + 1.0) / (stats.alpha + stats.beta + 2.0)


def raw_mean(stats: SampleStats) -> float:
    """alpha / (alpha + beta), or 0.5 when there are no counts."""
    total = stats.alpha + stats.beta
    return stats.alpha / total if total > 0 else 0.5


def thompson_draw(stats: SampleStats, rng: np.random.Generator) -> float:
    return float(rng.beta(stats.alpha + 1.0, stats.beta + 1.0))


class EstimatorStore:
    """Beta statistics for a dataset of samples with ids ``0 .. n-1``.

    Counts live in two float64 arrays indexed by sample id so that a whole
    training step can be applied with a few vectorized operations.
    """

    def __init__(self, n_samples: int, decay: DecayConfig | None = None, mode: str = TWO_SCALE):
        if n_samples < 1:
            raise ContractViolation(f"store needs at least one sample, got {n_samples}")
        self.decay = decay if decay is not None else DecayConfig()
        self.mode = normalize_mode(mode)
        self.alpha = np.zeros(n_samples)
        self.beta = np.zeros(n_samples)

    def __len__(self) -> int:
        return self.alpha.shape[0]

    def __getitem__(self, sample_id: int) -> SampleStats:
        return SampleStats(float(self.alpha[sample_id]), float(self.beta[sample_id]))

    def __setitem__(self, sample_id: int, stats: SampleStats) -> None:
        self.alpha[sample_id] = stats.alpha
        self.beta[sample_id] = stats.beta

    @property
    def ids(self) -> np.ndarray:
        return np.arange(len(self))

    def copy(self) -> "EstimatorStore":
        other = EstimatorStore(len(self), self.decay, self.mode)
        other.alpha = self.alpha.copy()
        other.beta = self.beta.copy()
        return other

    def update_step(self, sampled_ids: Sequence[int], r: Sequence[int], G: int) -> None:
        """Apply one training step: fast decay plus outcome on the sampled ids, slow decay elsewhere."""
        sampled_ids = np.asarray(sampled_ids, dtype=np.int64)
        r = np.asarray(r, dtype=np.int64)
        if sampled_ids.shape != r.shape:
            raise ContractViolation("sampled ids and success counts differ in length")
        if G < 1:
            raise ContractViolation(f"group size must be >= 1, got {G}")
        if r.size and (r.min() < 0 or r.max() > G):
            raise ContractViolation(f"success counts must lie in [0, {G}]")
        if np.unique(sampled_ids).size != sampled_ids.size:
            raise ContractViolation("sampled ids must be distinct")

        if self.mode == LAST_UPDATE:
            self.alpha[sampled_ids] = r
            self.beta[sampled_ids] = G - r
            return
        mask = np.zeros(len(self), dtype=bool)
        mask[sampled_ids] = True
        lam2 = self.decay.lambda2
        self.alpha[~mask] *= lam2
        self.beta[~mask] *= lam2
        lam1 = self.decay.lambda1
        self.alpha[sampled_ids] = lam1 * self.alpha[sampled_ids] + r
        self.beta[sampled_ids] = lam1 * self.beta[sampled_ids] + (G - r)

    def posterior_means(self, ids=None) -> np.ndarray:
        ids = self.ids if ids is None else np.asarray(ids, dtype=np.int64)
        a, b = self.alpha[ids], self.beta[ids]
        return (a + 1.0) / (a + b + 2.0)

    def raw_means(self, ids=None) -> np.ndarray:
        ids = self.ids if ids is None else np.asarray(ids, dtype=np.int64)
        a, b = self.alpha[ids], self.beta[ids]
        total = a + b
        out = np.full(ids.shape, 0.5)
        np.divide(a, total, out=out, where=total > 0)
        return out

    def draw(self, rng, ids=None, step: int = 0) -> np.ndarray:
        """One Beta(alpha+1, beta+1) variate per id.

        ``rng`` may be a numpy Generator (one sequential stream) or a
        :class:`SubstreamRNG`, in which case each draw is keyed by
        ``(seed, step, id)``.
        """
        ids = self.ids if ids is None else np.asarray(ids, dtype=np.int64)
        a, b = self.alpha[ids] + 1.0, self.beta[ids] + 1.0
        if isinstance(rng, SubstreamRNG):
            return rng.beta(a, b, step, ids)
        return rng.beta(a, b)

    def snapshot(self) -> list[dict]:
        return [
            {"id": int(i), "alpha": float(a), "beta": float(b)}
            for i, (a, b) in enumerate(zip(self.alpha, self.beta))
        ]

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.snapshot(), indent=1) + "\n")

    @classmethod
    def from_snapshot(cls, records: Iterable[dict], decay: DecayConfig | None = None,
                      mode: str = TWO_SCALE) -> "EstimatorStore":
        records = list(records)
        store = cls(len(records), decay, mode)
        seen = set()
        for rec in records:
            i = int(rec["id"])
            if i in seen or not 0 <= i < len(records):
                raise InitializationError(f"bad or duplicate sample id {i} in snapshot", i)
            seen.add(i)
            store[i] = SampleStats(float(rec["alpha"]), float(rec["beta"]))
        return store

    @classmethod
    def load(cls, path: str | Path, decay: DecayConfig | None = None,
             mode: str = TWO_SCALE) -> "EstimatorStore":
        return cls.from_snapshot(json.loads(Path(path).read_text()), decay, mode)


def init_from_rollouts(store: EstimatorStore, outcomes) -> EstimatorStore:
    """Seed every sample's counts from one initial group of rollouts.

    Exactly one outcome per sample id is required.
    """
    seen = np.zeros(len(store), dtype=bool)
    for out in outcomes:
        i = out.sample_id
        if not 0 <= i < len(store):
            raise InitializationError(f"outcome for unknown sample id {i}", i)
        if seen[i]:
            raise InitializationError(f"duplicate initial outcome for sample id {i}", i)
        _check_count(out.r, out.G)
        seen[i] = True
        store.alpha[i] = out.r
        store.beta[i] = out.G - out.r
    if not seen.all():
        missing = int(np.flatnonzero(~seen)[0])
        raise InitializationError(f"no initial outcome for sample id {missing}", missing)
    return store
