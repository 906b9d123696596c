"""Counter-based random streams keyed by (seed, step, sample id).

Every value produced here is a pure function of its key, so any partition of
the ids across workers gives bit-identical results to a single pass.
"""

from __future__ import annotations

import numpy as np
from scipy.special import betaincinv

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; uint64 arithmetic wraps.
    x = x + _GOLDEN
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


def hash_keys(*keys) -> np.ndarray:
    """Hash a sequence of int64 keys (scalars or broadcastable arrays) to uint64."""
    h = np.zeros((), dtype=np.uint64)
    with np.errstate(over="ignore"):
        for k in keys:
            k = np.asarray(k, dtype=np.int64).view(np.uint64)
            h = _mix(h ^ k)
    return h


def uniforms(*keys) -> np.ndarray:
    """Uniform variates strictly inside (0, 1), one per broadcast key."""
    bits = hash_keys(*keys) >> np.uint64(11)
    return (bits.astype(np.float64) + 0.5) * 2.0**-53


class SubstreamRNG:
    """Random source whose draws depend only on (seed, step, id).

    Beta variates are produced by inverse-CDF transform of a keyed uniform,
    which keeps one variate per key regardless of the shape parameters.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)

    def uniform(self, step: int, ids) -> np.ndarray:
        return uniforms(self.seed, step, np.asarray(ids, dtype=np.int64))

    def beta(self, a, b, step: int, ids) -> np.ndarray:
        u = self.uniform(step, ids)
        return betaincinv(np.asarray(a, dtype=float), np.asarray(b, dtype=float), u)

    def __repr__(self) -> str:
        return f"SubstreamRNG(seed={self.seed})"
