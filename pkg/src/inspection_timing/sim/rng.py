"""Counter-based uniforms keyed by (run seed, stream, counter).

Every draw is a pure function of its key, so a run produces the same numbers
whether it is simulated alone, in a batch, or in another process.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1

STREAM_GAP = 1
STREAM_TIME = 2
STREAM_KIND = 3


def mix64(z) -> np.ndarray:
    """SplitMix64 finalizer on uint64 arrays (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = z + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def run_seed(seed: int, index) -> np.ndarray:
    """Per-run key derived from the master seed and the run index."""
    s = np.uint64(int(seed) & _MASK64)
    return mix64(s ^ mix64(np.asarray(index, dtype=np.uint64)))


def uniforms(seeds: np.ndarray, stream: int, counters: np.ndarray) -> np.ndarray:
    """Uniforms on the open interval (0, 1), one per (seed, counter) pair."""
    with np.errstate(over="ignore"):
        key = np.asarray(counters, dtype=np.uint64) * np.uint64(8) + np.uint64(stream)
    h = mix64(np.asarray(seeds, dtype=np.uint64) ^ mix64(key))
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)
