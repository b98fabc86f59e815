"""Seeded random streams, split per node and per edge.

Each stream is a PCG64 generator (64-bit output) keyed by ``(seed, spawn_key)``.
Uniform floats are built from the top 53 bits of raw integer draws so that
traces do not depend on platform floating-point routines for sampling.
"""

from __future__ import annotations

import math

import numpy as np

_SCALE = 2.0**-53


class Stream:
    def __init__(self, seed: int, *key: int):
        ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
        self._bits = np.random.PCG64(ss)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        u = (int(self._bits.random_raw()) >> 11) * _SCALE
        return lo + (hi - lo) * u

    def exponential(self, mean: float) -> float:
        if mean <= 0:
            return 0.0
        u = (int(self._bits.random_raw()) >> 11) * _SCALE
        return -mean * math.log1p(-u)


NODE_STREAM = 0
EDGE_STREAM = 1
