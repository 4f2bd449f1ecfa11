"""Reproducible random number streams.

Every randomized routine in the package takes an RngStream. A stream is a
(seed, stream_id) pair mapped onto a counter-based Philox generator, so the
same pair always yields the same draws and distinct stream ids are
statistically independent regardless of how many draws each one makes.
Deterministic child streams let a routine fan out work (per dither, per
trial block) without coordinating a shared cursor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Default seed used when the caller (or CLI) supplies none.
DEFAULT_SEED = 20240901

_MASK64 = (1 << 64) - 1
_SPLIT_MULT = 0x9E3779B97F4A7C15  # 64-bit golden-ratio constant


@dataclass(frozen=True)
class RngStream:
    """Key for a counter-based generator: (seed, stream_id)."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        key = np.array([self.seed & _MASK64, self.stream_id & _MASK64],
                       dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, index: int) -> "RngStream":
        """Derive a sub-stream; distinct indices give distinct stream ids."""
        mixed = ((self.stream_id * _SPLIT_MULT) ^ (index + 1)) & _MASK64
        return RngStream(self.seed, mixed)
