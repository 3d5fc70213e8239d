"""Tabular Q-learning for the nominal and constrained agents."""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass
from typing import IO

import numpy as np

from ._rand import Uniforms
from .grid import N_ACTIONS, Action, GridSpec, shortest_path_length
from .records import Step, TrajectoryRecord

VARIANTS = ("nominal", "constrained")


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class RlHyperparams:
    learning_rate: float = 0.1
    discount: float = 0.95
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    episodes: int = 40000
    max_steps_per_episode: int = 200
    # episodes start from a uniformly drawn non-goal cell
    exploring_starts: bool = True

    def __post_init__(self):
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in (0, 1]")
        if not 0.0 < self.discount <= 1.0:
            raise ValueError("discount must lie in (0, 1]")
        for eps in (self.epsilon_start, self.epsilon_end):
            if not 0.0 <= eps <= 1.0:
                raise ValueError("exploration probabilities must lie in [0, 1]")
        if self.episodes < 0 or self.max_steps_per_episode < 1:
            raise ValueError("episode counts must be non-negative and the step cap positive")

    def epsilon(self, episode: int) -> float:
        """Linearly annealed exploration probability."""
        if self.episodes <= 1:
            return self.epsilon_end
        frac = episode / (self.episodes - 1)
        return self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac


class QTable:
    """State-action values over a grid; illegal actions hold NaN."""

    def __init__(self, values: np.ndarray, variant: str, width: int, height: int):
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
        self.values = np.asarray(values, dtype=float)
        self.values.setflags(write=False)
        self.variant = variant
        self.width = width
        self.height = height

    @classmethod
    def zeros(cls, spec: GridSpec, variant: str) -> "QTable":
        values = np.full((spec.n_states, N_ACTIONS), np.nan)
        for s, acts in enumerate(spec.tables.legal):
            values[s, acts] = 0.0
        return cls(values, variant, spec.width, spec.height)

    def q(self, cell, action: Action) -> float:
        v = self.values[cell[0] * self.width + cell[1], int(action)]
        if math.isnan(v):
            raise KeyError(f"no entry for {cell} {Action(action).name}")
        return float(v)

    def covers(self, spec: GridSpec) -> bool:
        if (spec.width, spec.height) != (self.width, self.height):
            return False
        return all(
            not np.isnan(self.values[s, acts]).any() for s, acts in enumerate(spec.tables.legal)
        )

    def __eq__(self, other):
        if not isinstance(other, QTable):
            return NotImplemented
        return (
            self.variant == other.variant
            and (self.width, self.height) == (other.width, other.height)
            and np.array_equal(self.values, other.values, equal_nan=True)
        )

    def to_dict(self) -> dict:
        values = {}
        for s in range(self.values.shape[0]):
            r, c = divmod(s, self.width)
            row = {
                Action(a).name: float(self.values[s, a])
                for a in range(N_ACTIONS)
                if not math.isnan(self.values[s, a])
            }
            values[f"{r},{c}"] = row
        return {"variant": self.variant, "width": self.width, "height": self.height, "values": values}

    @classmethod
    def from_dict(cls, d: dict) -> "QTable":
        width, height = int(d["width"]), int(d["height"])
        values = np.full((width * height, N_ACTIONS), np.nan)
        for key, row in d["values"].items():
            r, c = (int(x) for x in key.split(","))
            for name, v in row.items():
                values[r * width + c, Action[name]] = float(v)
        return cls(values, d["variant"], width, height)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "QTable":
        return cls.from_dict(json.loads(text))


def _argmax_random(row, actions, u: Uniforms) -> int:
    best = -math.inf
    ties = []
    for a in actions:
        v = row[a]
        if v > best:
            best = v
            ties = [a]
        elif v == best:
            ties.append(a)
    return ties[0] if len(ties) == 1 else u.pick(ties)


def train(
    spec: GridSpec,
    variant: str,
    hp: RlHyperparams,
    rng: np.random.Generator,
    log: IO[str] | None = None,
    log_every: int = 1000,
) -> QTable:
    """One-step Q-learning with linearly annealed epsilon-greedy exploration.

    The nominal variant sees the same dynamics with every violation penalty
    masked out, so only the move cost and the goal reward remain.
    ``log`` receives ``episode,mean_return`` CSV rows every ``log_every``
    episodes.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if shortest_path_length(spec) is None:
        raise TrainingError("goal unreachable from start")
    t = spec.tables
    penalize = variant == "constrained"
    q = [[0.0 if nb >= 0 else math.nan for nb in row] for row in t.neighbors]
    u = Uniforms(rng)
    alpha, gamma = hp.learning_rate, hp.discount
    starts = [s for s in range(spec.n_states) if s != t.goal]
    legal = t.legal
    writer = csv.writer(log) if log is not None else None
    if writer is not None:
        writer.writerow(["episode", "mean_return"])
    returns = 0.0
    for ep in range(hp.episodes):
        eps = hp.epsilon(ep)
        s = u.pick(starts) if hp.exploring_starts else t.start
        ret = 0.0
        for _ in range(hp.max_steps_per_episode):
            acts = legal[s]
            if u() < eps:
                a = u.pick(acts)
            else:
                a = _argmax_random(q[s], acts, u)
            s2, _ = t.transition(s, a, u(), u())
            r = t.reward(a, s2, penalize=penalize)
            ret += r
            if s2 == t.goal:
                target = r
            else:
                row2 = q[s2]
                target = r + gamma * max(row2[b] for b in legal[s2])
            q[s][a] += alpha * (target - q[s][a])
            s = s2
            if s == t.goal:
                break
        returns += ret
        if writer is not None and (ep + 1) % log_every == 0:
            writer.writerow([ep + 1, returns / log_every])
            returns = 0.0
    values = np.array(q, dtype=float)
    if not np.isfinite(values[~np.isnan(values)]).all():
        raise TrainingError("non-finite Q values")
    return QTable(values, variant, spec.width, spec.height)


def greedy_rollout(
    spec: GridSpec,
    q: QTable,
    rng: np.random.Generator,
    max_steps: int = 200,
    grid_id: str = "",
    clock=None,
) -> TrajectoryRecord:
    """Follow argmax actions under the true dynamics and the full reward."""
    if not q.covers(spec):
        raise ValueError("Q-table does not cover the grid")
    t = spec.tables
    u = Uniforms(rng, block=256)
    now = clock.now if clock is not None else time.perf_counter
    charge = clock.charge if clock is not None else None
    values = q.values.tolist()
    traj = TrajectoryRecord(grid_id=grid_id, start=spec.start)
    t_start = now()
    s = t.start
    for _ in range(max_steps):
        t0 = now()
        a = _argmax_random(values[s], t.legal[s], u)
        if charge is not None:
            charge("rl")
        dt = now() - t0
        s2, _ = t.transition(s, a, u(), u())
        traj.append(
            Step(
                state=spec.cell(s),
                action=Action(a),
                next_state=spec.cell(s2),
                reward=t.reward(a, s2),
                solver="RL",
                decision_time=dt,
                violations=t.violations(a, s2),
            )
        )
        s = s2
        if s == t.goal:
            traj.finished = True
            break
    traj.wall_time = now() - t_start
    return traj
