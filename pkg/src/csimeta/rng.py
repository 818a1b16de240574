"""Counter-based random streams with deterministic child-stream derivation.

Every stochastic operation in the package draws from an :class:`RngStream`.
Streams are keyed by ``(seed, stream_id)``; the same key always replays the
same sequence, and distinct stream ids are statistically independent, so
work units (tasks, UEs, slots, draws) can be generated in any order or in
parallel without changing the result.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(state: int) -> int:
    state &= _MASK64
    state ^= state >> 30
    state = (state * 0xBF58476D1CE4E5B9) & _MASK64
    state ^= state >> 27
    state = (state * 0x94D049BB133111EB) & _MASK64
    state ^= state >> 31
    return state


def _label_to_int(label) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label) & _MASK64
    digest = hashlib.blake2s(str(label).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class RngStream:
    """Philox-backed stream identified by a 64-bit (seed, stream_id) pair."""

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        self.position = 0
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def derive(self, *labels) -> "RngStream":
        """Child stream for labels like (task, ue, slot) or a purpose string."""
        sid = self.stream_id
        for label in labels:
            sid = _splitmix64((sid + _GOLDEN + _label_to_int(label)) & _MASK64)
        return RngStream(self.seed, sid)

    def standard_normal(self, shape) -> np.ndarray:
        self.position += int(np.prod(shape))
        return self._gen.standard_normal(shape)

    def uniform(self, low: float, high: float, size=None):
        self.position += 1 if size is None else int(np.prod(size))
        return self._gen.uniform(low, high, size)

    def uniform_int(self, low: int, high: int) -> int:
        """One integer uniform on the inclusive range {low..high}."""
        self.position += 1
        return int(self._gen.integers(low, high + 1))

    def subset(self, values, k: int) -> np.ndarray:
        """k values sampled uniformly without replacement, returned sorted."""
        values = np.asarray(values)
        if k > values.size:
            raise ValueError(f"cannot sample {k} from {values.size} values")
        self.position += k
        picked = self._gen.choice(values.size, size=k, replace=False)
        return np.sort(values[picked])

    def permutation(self, n: int) -> np.ndarray:
        self.position += n
        return self._gen.permutation(n)
