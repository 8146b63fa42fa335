"""Seeded, splittable random number streams.

A stream is identified by a 64-bit seed plus a tuple of stream ids.
Deriving substreams with different ids yields independent, reproducible
sequences; identical (seed, ids) always replays the same sequence.
"""

from __future__ import annotations

import numpy as np


class RngStream:
    def __init__(self, seed: int, stream: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.stream = tuple(int(s) for s in stream)
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(entropy=self.seed, spawn_key=self.stream)))

    def derive(self, *ids: int) -> "RngStream":
        """Independent child stream; does not consume from this stream."""
        return RngStream(self.seed, self.stream + tuple(ids))

    # thin wrappers over the generator, so call sites stay uniform
    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def geometric(self, p, size=None):
        return self._gen.geometric(p, size)

    def permutation(self, n):
        return self._gen.permutation(n)

    def choice(self, a, size=None, replace=True):
        return self._gen.choice(a, size=size, replace=replace)

    def shuffle(self, seq: list) -> None:
        self._gen.shuffle(seq)
