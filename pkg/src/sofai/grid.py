"""Non-deterministic constrained grid world.

Cells are ``(row, col)`` tuples, ``(0, 0)`` is the top-left corner and
``N`` decreases the row index. Internally cells are flattened to
``row * width + col`` so the simulation loops can work on plain ints.
"""
from __future__ import annotations

import enum
import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

Cell = tuple[int, int]

COLORS = ("green", "blue")


class GridError(ValueError):
    """Raised for out-of-bounds cells, illegal moves and bad grid parameters."""


class Action(enum.IntEnum):
    N = 0
    NE = 1
    E = 2
    SE = 3
    S = 4
    SW = 5
    W = 6
    NW = 7

    @property
    def delta(self) -> tuple[int, int]:
        return _DELTAS[self]


_DELTAS = {
    Action.N: (-1, 0),
    Action.NE: (-1, 1),
    Action.E: (0, 1),
    Action.SE: (1, 1),
    Action.S: (1, 0),
    Action.SW: (1, -1),
    Action.W: (0, -1),
    Action.NW: (-1, -1),
}

N_ACTIONS = len(Action)


@dataclass(frozen=True)
class StepOutcome:
    next_state: Cell
    reward: float
    done: bool
    slipped: bool
    violations: int = 0


@dataclass(frozen=True, eq=True)
class GridSpec:
    """A constrained grid: geometry, endpoints, constraints and penalties.

    ``features`` maps a cell to its color tag; colors listed in
    ``penalized_colors`` cost a violation when entered.
    """

    width: int
    height: int
    start: Cell
    goal: Cell
    constrained_actions: frozenset = frozenset()
    constrained_states: frozenset = frozenset()
    features: Mapping[Cell, str] = field(default_factory=dict)
    move_penalty: float = -4.0
    violation_penalty: float = -50.0
    goal_reward: float = 10.0
    slip_probability: float = 0.10
    penalized_colors: tuple[str, ...] = COLORS

    def __post_init__(self):
        object.__setattr__(self, "start", tuple(self.start))
        object.__setattr__(self, "goal", tuple(self.goal))
        object.__setattr__(
            self, "constrained_actions", frozenset(Action(a) for a in self.constrained_actions)
        )
        object.__setattr__(
            self, "constrained_states", frozenset(tuple(c) for c in self.constrained_states)
        )
        object.__setattr__(self, "features", {tuple(c): v for c, v in dict(self.features).items()})
        if self.width < 1 or self.height < 1:
            raise GridError("grid dimensions must be positive")
        for cell in (self.start, self.goal, *self.constrained_states, *self.features):
            self._check_cell(cell)
        if self.start == self.goal:
            raise GridError("start and goal must differ")
        for cell in (self.start, self.goal):
            if cell in self.features or cell in self.constrained_states:
                raise GridError(f"endpoint {cell} carries a constraint")
        for color in self.features.values():
            if color not in COLORS:
                raise GridError(f"unknown color tag {color!r}")
        if not 0.0 <= self.slip_probability <= 1.0:
            raise GridError("slip_probability must lie in [0, 1]")

    def _check_cell(self, cell: Cell) -> None:
        r, c = cell
        if not (0 <= r < self.height and 0 <= c < self.width):
            raise GridError(f"cell {cell} outside {self.height}x{self.width} grid")

    @property
    def n_states(self) -> int:
        return self.width * self.height

    def index(self, cell: Cell) -> int:
        self._check_cell(cell)
        return cell[0] * self.width + cell[1]

    def cell(self, index: int) -> Cell:
        return divmod(int(index), self.width)

    @property
    def diameter(self) -> int:
        """Chebyshev diameter, the longest shortest path on an empty grid."""
        return max(self.width, self.height) - 1

    @property
    def worst_move_reward(self) -> float:
        """Lowest reward a single move can earn: three stacked violations."""
        return self.move_penalty + 3 * self.violation_penalty

    @cached_property
    def tables(self) -> "GridTables":
        return GridTables.build(self)

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "start": list(self.start),
            "goal": list(self.goal),
            "constrained_actions": sorted(a.name for a in self.constrained_actions),
            "constrained_states": sorted(list(c) for c in self.constrained_states),
            "features": [
                {"cell": list(c), "color": self.features[c]} for c in sorted(self.features)
            ],
            "penalties": {
                "move": self.move_penalty,
                "violation": self.violation_penalty,
                "goal": self.goal_reward,
                "colors": list(self.penalized_colors),
            },
            "slip_probability": self.slip_probability,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        pen = d.get("penalties", {})
        return cls(
            width=int(d["width"]),
            height=int(d["height"]),
            start=tuple(d["start"]),
            goal=tuple(d["goal"]),
            constrained_actions=frozenset(Action[name] for name in d["constrained_actions"]),
            constrained_states=frozenset(tuple(c) for c in d["constrained_states"]),
            features={tuple(f["cell"]): f["color"] for f in d["features"]},
            move_penalty=float(pen.get("move", -4.0)),
            violation_penalty=float(pen.get("violation", -50.0)),
            goal_reward=float(pen.get("goal", 10.0)),
            penalized_colors=tuple(pen.get("colors", COLORS)),
            slip_probability=float(d["slip_probability"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GridSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class GridTables:
    """Flattened lookup tables used by the simulation loops.

    ``neighbors[s][a]`` is the destination index or -1 when off-grid.
    """

    neighbors: list
    legal: list
    action_violation: list
    landing_violations: list
    goal: int
    start: int
    move_penalty: float
    violation_penalty: float
    goal_reward: float
    slip_probability: float

    @classmethod
    def build(cls, spec: GridSpec) -> "GridTables":
        neighbors = []
        legal = []
        for s in range(spec.n_states):
            r, c = spec.cell(s)
            row = []
            for a in Action:
                dr, dc = a.delta
                rr, cc = r + dr, c + dc
                inside = 0 <= rr < spec.height and 0 <= cc < spec.width
                row.append(rr * spec.width + cc if inside else -1)
            neighbors.append(row)
            legal.append([a for a in range(N_ACTIONS) if row[a] >= 0])
        landing = [0] * spec.n_states
        for cell in spec.constrained_states:
            landing[spec.index(cell)] += 1
        for cell, color in spec.features.items():
            if color in spec.penalized_colors:
                landing[spec.index(cell)] += 1
        return cls(
            neighbors=neighbors,
            legal=legal,
            action_violation=[int(a in spec.constrained_actions) for a in Action],
            landing_violations=landing,
            goal=spec.index(spec.goal),
            start=spec.index(spec.start),
            move_penalty=spec.move_penalty,
            violation_penalty=spec.violation_penalty,
            goal_reward=spec.goal_reward,
            slip_probability=spec.slip_probability,
        )

    def violations(self, a: int, s_next: int) -> int:
        return self.action_violation[a] + self.landing_violations[s_next]

    def reward(self, a: int, s_next: int, *, penalize: bool = True) -> float:
        r = self.move_penalty
        if penalize:
            r += self.violation_penalty * (self.action_violation[a] + self.landing_violations[s_next])
        if s_next == self.goal:
            r += self.goal_reward
        return r

    def transition(self, s: int, a: int, u_slip: float, u_pick: float) -> tuple[int, bool]:
        """Resolve a move from two uniforms in [0, 1)."""
        row = self.neighbors[s]
        target = row[a]
        if u_slip < self.slip_probability:
            others = [row[b] for b in self.legal[s] if b != a]
            if others:
                return others[int(u_pick * len(others))], True
        return target, False


def legal_actions(spec: GridSpec, state: Cell) -> list[Action]:
    """Directions whose destination lies inside the grid.

    Constrained actions stay legal, they are penalized rather than forbidden.
    """
    s = spec.index(state)
    return [Action(a) for a in spec.tables.legal[s]]


def reward_of(spec: GridSpec, state: Cell, action: Action, next_state: Cell) -> float:
    """Additive reward for one move.

    The action constraint is judged on the intended action, state and
    color constraints on the realized cell.
    """
    spec.index(state)
    return spec.tables.reward(int(action), spec.index(next_state))


def step(spec: GridSpec, state: Cell, action: Action, rng: np.random.Generator) -> StepOutcome:
    t = spec.tables
    s = spec.index(state)
    a = int(action)
    if t.neighbors[s][a] < 0:
        raise GridError(f"action {Action(a).name} leaves the grid from {state}")
    u = rng.random(2)
    s_next, slipped = t.transition(s, a, u[0], u[1])
    return StepOutcome(
        next_state=spec.cell(s_next),
        reward=t.reward(a, s_next),
        done=s_next == t.goal,
        slipped=slipped,
        violations=t.violations(a, s_next),
    )


def shortest_path_length(spec: GridSpec, source: Cell | None = None) -> int | None:
    """Breadth-first search over legal moves; ``None`` when the goal is unreachable."""
    t = spec.tables
    src = t.start if source is None else spec.index(source)
    dist = {src: 0}
    queue = deque([src])
    while queue:
        s = queue.popleft()
        if s == t.goal:
            return dist[s]
        for a in t.legal[s]:
            n = t.neighbors[s][a]
            if n not in dist:
                dist[n] = dist[s] + 1
                queue.append(n)
    return None


@dataclass(frozen=True)
class GridParams:
    width: int = 9
    height: int = 9
    n_constrained_actions: int = 2
    n_constrained_states: int = 6
    n_green: int = 6
    n_blue: int = 6
    slip_probability: float = 0.10
    move_penalty: float = -4.0
    violation_penalty: float = -50.0
    goal_reward: float = 10.0


def random_grid(rng: np.random.Generator, params: GridParams = GridParams()) -> GridSpec:
    """Draw start, goal, constrained cells and colored cells as distinct cells."""
    n_cells = params.width * params.height
    n_special = 2 + params.n_constrained_states + params.n_green + params.n_blue
    if n_special > n_cells:
        raise GridError(f"{n_special} special cells do not fit in {n_cells} cells")
    if not 0 <= params.n_constrained_actions <= N_ACTIONS:
        raise GridError("constrained action count must lie in [0, 8]")
    cells = [divmod(int(i), params.width) for i in rng.choice(n_cells, size=n_special, replace=False)]
    actions = rng.choice(N_ACTIONS, size=params.n_constrained_actions, replace=False)
    start, goal = cells[0], cells[1]
    i = 2
    constrained = cells[i : i + params.n_constrained_states]
    i += params.n_constrained_states
    green = cells[i : i + params.n_green]
    i += params.n_green
    blue = cells[i : i + params.n_blue]
    features = {c: "green" for c in green}
    features.update({c: "blue" for c in blue})
    return GridSpec(
        width=params.width,
        height=params.height,
        start=start,
        goal=goal,
        constrained_actions=frozenset(Action(int(a)) for a in actions),
        constrained_states=frozenset(constrained),
        features=features,
        move_penalty=params.move_penalty,
        violation_penalty=params.violation_penalty,
        goal_reward=params.goal_reward,
        slip_probability=params.slip_probability,
    )


def count_special(spec: GridSpec) -> tuple[int, int, int, int]:
    colors = list(spec.features.values())
    return (
        len(spec.constrained_actions),
        len(spec.constrained_states),
        colors.count("green"),
        colors.count("blue"),
    )

