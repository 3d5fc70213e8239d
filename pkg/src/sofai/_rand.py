"""Buffered uniforms for the per-step simulation loops."""
from __future__ import annotations

import numpy as np


class Uniforms:
    """Hands out floats in [0, 1) drawn from ``rng`` in blocks.

    Calling ``rng.random()`` once per draw dominates the cost of the tabular
    loops; block draws keep the stream deterministic for a given generator.
    """

    def __init__(self, rng: np.random.Generator, block: int = 4096):
        self.rng = rng
        self.block = block
        self._buf = rng.random(block).tolist()
        self._i = 0

    def __call__(self) -> float:
        if self._i == self.block:
            self._buf = self.rng.random(self.block).tolist()
            self._i = 0
        u = self._buf[self._i]
        self._i += 1
        return u

    def index(self, n: int) -> int:
        return int(self() * n)

    def pick(self, items):
        return items[int(self() * len(items))]
