"""Model of self: what the agent has experienced on one grid.

Every statistic is a fold over the trajectory log, so a store rebuilt from
its log matches the live store exactly. Queries without data return ``None``.
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import IO, Iterable

from .grid import Action, Cell
from .records import Step, TrajectoryRecord

CONFIDENCE_EPS = 1e-10


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


@dataclass
class RunningStats:
    """Welford accumulator; ``std`` is the population standard deviation."""

    n: int = 0
    total: float = 0.0
    _mu: float = 0.0
    m2: float = 0.0

    def add(self, x: float) -> None:
        self.n += 1
        self.total += x
        delta = x - self._mu
        self._mu += delta / self.n
        self.m2 += delta * (x - self._mu)

    @property
    def mean(self) -> float:
        # plain sum / n so the value matches a recomputation from the samples
        return self.total / self.n

    @property
    def std(self) -> float:
        return math.sqrt(self.m2 / self.n) if self.n else 0.0


def part_reward(trajectory: TrajectoryRecord) -> float:
    """Reward accumulated so far on a (partial) trajectory."""
    return trajectory.total_reward


class ExperienceStore:
    """Reward samples, solver adoption counts and timings for one grid."""

    def __init__(self):
        self.reward_samples: dict[tuple[Cell, Action], list[float]] = defaultdict(list)
        self._reward_stats: dict[tuple[Cell, Action], RunningStats] = defaultdict(RunningStats)
        self._state_visits: dict[Cell, int] = defaultdict(int)
        self.adoption_counts: dict[tuple[Cell, str], int] = defaultdict(int)
        self.arrival_rewards: dict[Cell, list[float]] = defaultdict(list)
        self._arrival_stats: dict[Cell, RunningStats] = defaultdict(RunningStats)
        self.s2_reward_samples: dict[Cell, list[float]] = defaultdict(list)
        self._s2_reward_stats: dict[Cell, RunningStats] = defaultdict(RunningStats)
        self.s2_time = RunningStats()
        self.trajectory_log: list[TrajectoryRecord] = []
        self._length_stats = RunningStats()

    # -- updates ---------------------------------------------------------
    def record_step(self, trajectory: TrajectoryRecord, step: Step) -> None:
        """Append ``step`` to the in-progress trajectory and fold it in."""
        trajectory.append(step)
        self._fold_step(step)

    def _fold_step(self, step: Step) -> None:
        key = (step.state, step.action)
        self.reward_samples[key].append(step.reward)
        self._reward_stats[key].add(step.reward)
        self._state_visits[step.state] += 1
        self.adoption_counts[(step.state, step.solver)] += 1
        if step.solver == "S2":
            self.s2_reward_samples[step.state].append(step.reward)
            self._s2_reward_stats[step.state].add(step.reward)
            if step.s2_time is not None:
                self.s2_time.add(step.s2_time)

    def finish_trajectory(self, trajectory: TrajectoryRecord) -> None:
        """Close a trajectory: log it and record first-arrival partial rewards.

        Arrival statistics only change here so ``avg_reward`` always reflects
        past trajectories, never the one in progress.
        """
        for cell, partial in first_arrivals(trajectory).items():
            self.arrival_rewards[cell].append(partial)
            self._arrival_stats[cell].add(partial)
        self.trajectory_log.append(trajectory)
        self._length_stats.add(trajectory.length)

    # -- queries ---------------------------------------------------------
    def n_traj(self, state: Cell, scope: str = "ALL") -> int:
        if scope == "ALL":
            return self.adoption_counts.get((state, "S1"), 0) + self.adoption_counts.get((state, "S2"), 0)
        if scope not in ("S1", "S2"):
            raise ValueError(f"unknown scope {scope!r}")
        return self.adoption_counts.get((state, scope), 0)

    def avg_reward(self, state: Cell) -> float | None:
        st = self._arrival_stats.get(state)
        return st.mean if st is not None else None

    def expected_reward(self, state: Cell, action: Action) -> float | None:
        st = self._reward_stats.get((state, action))
        return st.mean if st is not None else None

    def reward_std(self, state: Cell, action: Action) -> float | None:
        st = self._reward_stats.get((state, action))
        return st.std if st is not None else None

    def action_frequency(self, state: Cell, action: Action) -> float:
        """Share of recorded moves at ``state`` whose intended action was ``action``."""
        total = self._state_visits.get(state, 0)
        if not total:
            return 0.0
        st = self._reward_stats.get((state, action))
        return st.n / total if st is not None else 0.0

    def confidence(self, state: Cell, action: Action) -> float:
        """``sigmoid((r - 0.5) / (sigma + 1e-10))``.

        ``r`` is how often ``action`` was taken at ``state`` and ``sigma`` the
        spread of its rewards; an untried action has ``r = 0, sigma = 0``.
        """
        st = self._reward_stats.get((state, action))
        if st is None:
            return confidence_value(0.0, 0.0)
        return confidence_value(st.n / self._state_visits[state], st.std)

    def exp_reward_s2(self, state: Cell) -> float | None:
        st = self._s2_reward_stats.get(state)
        return st.mean if st is not None else None

    def exp_time_s2(self) -> float | None:
        return self.s2_time.mean if self.s2_time.n else None

    def mean_length(self) -> float | None:
        return self._length_stats.mean if self._length_stats.n else None

    def summary(self) -> dict:
        """Derived statistics in a JSON-friendly form."""

        def key(c):
            return f"{c[0]},{c[1]}"

        return {
            "trajectories": len(self.trajectory_log),
            "expected_reward": {
                f"{key(s)}:{Action(a).name}": st.mean for (s, a), st in sorted(self._reward_stats.items())
            },
            "adoptions": {f"{key(s)}:{solver}": n for (s, solver), n in sorted(self.adoption_counts.items())},
            "avg_reward": {key(s): st.mean for s, st in sorted(self._arrival_stats.items())},
            "exp_reward_s2": {key(s): st.mean for s, st in sorted(self._s2_reward_stats.items())},
            "exp_time_s2": self.exp_time_s2(),
        }

    # -- persistence -----------------------------------------------------
    @classmethod
    def replay(cls, log: Iterable[TrajectoryRecord]) -> "ExperienceStore":
        store = cls()
        for traj in log:
            for step in traj.steps:
                store._fold_step(step)
            store.finish_trajectory(traj)
        return store

    def dump(self, log_file: IO[str], snapshot_file: IO[str] | None = None) -> None:
        for traj in self.trajectory_log:
            log_file.write(json.dumps(traj.to_dict()) + "\n")
        if snapshot_file is not None:
            json.dump(self.summary(), snapshot_file, sort_keys=True)

    @classmethod
    def load(cls, log_file: IO[str]) -> "ExperienceStore":
        return cls.replay(
            TrajectoryRecord.from_dict(json.loads(line)) for line in log_file if line.strip()
        )


def confidence_value(r: float, sigma: float) -> float:
    return sigmoid((r - 0.5) / (sigma + CONFIDENCE_EPS))


def first_arrivals(trajectory: TrajectoryRecord) -> dict[Cell, float]:
    """Partial reward held on first arrival at each cell; the start counts with 0."""
    arrivals = {trajectory.start: 0.0}
    partial = 0.0
    for step in trajectory.steps:
        partial += step.reward
        arrivals.setdefault(step.next_state, partial)
    return arrivals
