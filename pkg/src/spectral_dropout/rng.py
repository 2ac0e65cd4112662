"""Deterministic random number generation for reproducible dropout masks.

The generator is a counter-based splitmix64 stream: output ``i`` is
``mix64(seed + (i+1) * GOLDEN)`` where ``mix64`` is the splitmix64
finalizer (Steele, Lea & Flood / Vigna).  Counter-based generation means
draws are pure uint64 arithmetic with no sequential state update, so any
block of draws can be produced in one vectorized numpy pass and the
sequence is byte-for-byte identical on every platform and numpy version.

Streams are split by deriving a child seed from the parent seed and a
child index through the same mixing function; parent and child sequences
are statistically independent for practical purposes.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64_MASK = 0xFFFFFFFFFFFFFFFF


def _mix64(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer applied elementwise to a uint64 array."""
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


class SeededRng:
    """Counter-based deterministic RNG.

    A single instance is meant to be owned by one caller; concurrent use
    splits streams via :meth:`child` instead of sharing the object.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _U64_MASK
        self._counter = 0

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, counter={self._counter})"

    def child(self, index: int) -> "SeededRng":
        """Derive an independent stream; deterministic in (seed, index)."""
        with np.errstate(over="ignore"):
            tag = np.uint64((index + 1) & _U64_MASK) * _GOLDEN
            derived = _mix64(np.array([np.uint64(self.seed) ^ tag]))[0]
        return SeededRng(int(derived))

    def draw_u64(self, n: int) -> np.ndarray:
        """Next ``n`` raw uint64 words."""
        if n < 0:
            raise ValueError(f"draw count must be >= 0, got {n}")
        with np.errstate(over="ignore"):
            idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
            out = _mix64(np.uint64(self.seed) + idx * _GOLDEN)
        self._counter += n
        return out

    def uniform(self, n: int) -> np.ndarray:
        """``n`` doubles uniform on [0, 1), using the top 53 bits per word."""
        return (self.draw_u64(n) >> np.uint64(11)) * (2.0 ** -53)

    def bernoulli(self, n: int, keep_prob: float) -> np.ndarray:
        """``n`` independent {0,1} draws, each 1 with probability keep_prob."""
        if not 0.0 <= keep_prob <= 1.0:
            raise ValueError(f"keep_prob must be in [0, 1], got {keep_prob}")
        return (self.uniform(n) < keep_prob).astype(np.uint8)

    def normal(self, n: int) -> np.ndarray:
        """``n`` standard normal draws via Box-Muller."""
        m = (n + 1) // 2
        # shift into (0, 1] so log() is safe
        u1 = (self.draw_u64(m).astype(np.float64) + 1.0) * (2.0 ** -64)
        u2 = self.uniform(m)
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.concatenate([r * np.cos(theta), r * np.sin(theta)])
        return out[:n]

    def randint(self, n: int, high: int) -> np.ndarray:
        """``n`` integers uniform on [0, high)."""
        if high <= 0:
            raise ValueError(f"high must be positive, got {high}")
        return np.minimum((self.uniform(n) * high).astype(np.int64), high - 1)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of range(n), deterministic in the stream."""
        perm = np.arange(n)
        if n < 2:
            return perm
        picks = self.uniform(n - 1)
        for i in range(n - 1, 0, -1):
            j = min(int(picks[n - 1 - i] * (i + 1)), i)
            perm[i], perm[j] = perm[j], perm[i]
        return perm


def bernoulli_bits(rng: SeededRng, k: int, keep_prob: float) -> np.ndarray:
    """Length-``k`` vector of independent Bernoulli(keep_prob) bits."""
    return rng.bernoulli(k, keep_prob)
