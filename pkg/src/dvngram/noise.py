"""Frequency-based noise distribution for negative sampling.

Negatives are drawn over the full unified vocabulary (words and n-gram
tokens alike) with probability proportional to frequency**exponent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels


class Rng:
    """Caller-owned splitmix64 state.

    Cheap to fork and safe to hand to jitted kernels; parallel samplers
    need one instance each.
    """

    def __init__(self, seed: int):
        self.state = np.array([np.uint64(seed)], dtype=np.uint64)

    def next_uint64(self) -> int:
        return int(_kernels.rng_next(self.state))

    def next_double(self) -> float:
        """Uniform in [0, 1)."""
        return float(_kernels.rng_double(self.state))

    def fork(self, stream: int) -> "Rng":
        """Independent generator derived from this state and a stream tag."""
        child = Rng(0)
        child.state[0] = np.uint64(self.next_uint64()) ^ np.uint64(stream)
        return child


@dataclass
class NoiseTable:
    """Cumulative-weight table realizing the sampling distribution.

    cumulative_weights[i] = sum of frequency**exponent over tokens 0..i.
    Immutable after construction; shareable across threads.
    """

    cumulative_weights: np.ndarray
    exponent: float
    weights: np.ndarray = field(repr=False, default=None)

    def __len__(self) -> int:
        return len(self.cumulative_weights)

    @property
    def total_weight(self) -> float:
        return float(self.cumulative_weights[-1])

    def probabilities(self) -> np.ndarray:
        """Exact per-token sampling probabilities (sums to 1)."""
        return self.weights / self.total_weight


def build_noise_table(vocabulary, exponent: float = 0.75) -> NoiseTable:
    """Build the negative-sampling table from vocabulary frequencies.

    `vocabulary` is anything exposing a `frequency` array (a Vocabulary,
    or a bare sequence of counts). Raises ValueError on an empty
    vocabulary, which signals an unusable corpus.
    """
    if exponent <= 0:
        raise ValueError("noise exponent must be > 0")
    freqs = np.asarray(getattr(vocabulary, "frequency", vocabulary),
                       dtype=np.float64)
    if freqs.size == 0:
        raise ValueError("cannot build a noise table over an empty vocabulary")
    if np.any(freqs < 0):
        raise ValueError("token frequencies must be non-negative")
    weights = np.where(freqs > 0, freqs, 0.0) ** exponent
    if weights.sum() <= 0:
        raise ValueError("at least one token frequency must be positive")
    return NoiseTable(cumulative_weights=np.cumsum(weights),
                      exponent=exponent, weights=weights)


def sample_negative(table: NoiseTable, rng: Rng) -> int:
    """Draw one token id from the table's distribution; advances `rng`."""
    return int(_kernels.sample_cumulative(table.cumulative_weights, rng.state))
