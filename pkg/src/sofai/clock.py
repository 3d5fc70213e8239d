"""Time sources for decision-time and wall-time measurements."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

DEFAULT_COSTS = {
    "s1": 2e-6,
    "mc": 1e-6,
    "s2_iteration": 1e-6,
    "rl": 1e-6,
}


class MonotonicClock:
    """Wall clock; ``charge`` is a no-op because real time passes by itself."""

    def now(self) -> float:
        return time.perf_counter()

    def charge(self, kind: str, units: float = 1.0) -> None:
        pass


@dataclass
class VirtualClock:
    """Deterministic clock advanced by a fixed cost per operation.

    Replays with the same seed produce identical timings, which wall time
    cannot offer.
    """

    costs: dict = field(default_factory=lambda: dict(DEFAULT_COSTS))
    elapsed: float = 0.0

    def now(self) -> float:
        return self.elapsed

    def charge(self, kind: str, units: float = 1.0) -> None:
        self.elapsed += self.costs[kind] * units


def make_clock(name: str, costs: dict | None = None):
    if name == "monotonic":
        return MonotonicClock()
    if name == "virtual":
        return VirtualClock(dict(costs or DEFAULT_COSTS))
    raise ValueError(f"unknown clock {name!r}")
