"""Per-move and per-trajectory records shared by the agents and the harness."""
from __future__ import annotations

from dataclasses import dataclass, field

from .grid import Action, Cell

SOLVERS = ("S1", "S2", "RL")


@dataclass
class Step:
    state: Cell
    action: Action
    next_state: Cell
    reward: float
    solver: str
    decision_time: float = 0.0
    violations: int = 0
    # S2's own compute time when it was invoked for this move
    s2_time: float | None = None
    phase: str | None = None

    def to_dict(self) -> dict:
        d = {
            "s": list(self.state),
            "a": Action(self.action).name,
            "n": list(self.next_state),
            "r": self.reward,
            "solver": self.solver,
            "dt": self.decision_time,
            "v": self.violations,
        }
        if self.s2_time is not None:
            d["s2_time"] = self.s2_time
        if self.phase is not None:
            d["phase"] = self.phase
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Step":
        return cls(
            state=tuple(d["s"]),
            action=Action[d["a"]],
            next_state=tuple(d["n"]),
            reward=float(d["r"]),
            solver=d["solver"],
            decision_time=float(d["dt"]),
            violations=int(d.get("v", 0)),
            s2_time=d.get("s2_time"),
            phase=d.get("phase"),
        )


@dataclass
class TrajectoryRecord:
    grid_id: str
    start: Cell
    steps: list[Step] = field(default_factory=list)
    total_reward: float = 0.0
    wall_time: float = 0.0
    finished: bool = False
    agent: str = ""
    index: int = 0

    @property
    def length(self) -> int:
        return len(self.steps)

    @property
    def violations(self) -> int:
        return sum(s.violations for s in self.steps)

    def append(self, step: Step) -> None:
        self.steps.append(step)
        self.total_reward += step.reward

    def usage(self) -> tuple[float, float]:
        """Fractions of moves decided by S1 and by S2."""
        if not self.steps:
            return 0.0, 0.0
        n1 = sum(1 for s in self.steps if s.solver == "S1")
        n2 = sum(1 for s in self.steps if s.solver == "S2")
        return n1 / len(self.steps), n2 / len(self.steps)

    def to_dict(self) -> dict:
        return {
            "grid": self.grid_id,
            "agent": self.agent,
            "index": self.index,
            "start": list(self.start),
            "total_reward": self.total_reward,
            "length": self.length,
            "wall_time": self.wall_time,
            "finished": self.finished,
            "steps": [s.to_dict() for s in self.steps],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrajectoryRecord":
        rec = cls(
            grid_id=d["grid"],
            start=tuple(d["start"]),
            wall_time=float(d["wall_time"]),
            finished=bool(d["finished"]),
            agent=d.get("agent", ""),
            index=int(d.get("index", 0)),
        )
        for s in d["steps"]:
            rec.append(Step.from_dict(s))
        if rec.total_reward != d["total_reward"] or rec.length != d["length"]:
            raise ValueError("trajectory totals disagree with its steps")
        return rec
