"""Counter-based SplitMix64 streams, vectorized over trajectories.

Trajectory ``i`` of a run seeded with ``seed`` owns the SplitMix64 generator
whose state starts at ``key_i``, the ``i``-th SplitMix64 output of ``seed``.
Its ``k``-th draw is ``mix(key_i + (k + 1) * GAMMA)``, so any draw of any
trajectory can be computed directly, independent of execution order.
"""

from __future__ import annotations

import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer (wrapping uint64 arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def stream_keys(seed: int, indices: np.ndarray) -> np.ndarray:
    """Per-trajectory stream keys for trajectory ``indices``."""
    base = np.uint64(int(seed) & _MASK64)
    idx = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(base + (idx + np.uint64(1)) * GAMMA)


def uniforms(keys: np.ndarray, draw: int) -> np.ndarray:
    """Draw number ``draw`` (0-based) of every stream, as doubles in [0, 1)."""
    with np.errstate(over="ignore"):
        z = mix64(keys + np.uint64(draw + 1) * GAMMA)
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
