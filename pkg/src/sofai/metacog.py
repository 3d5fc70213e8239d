"""Metacognitive arbitration between adopting S1's move and invoking S2."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .experience import ExperienceStore, part_reward
from .grid import Cell
from .records import TrajectoryRecord
from .solvers import S1Proposal

ADOPT_S1 = "AdoptS1"
INVOKE_S2 = "InvokeS2"

MC1 = "MC1"
MC2_RANDOM = "MC2-random"
MC2_COST = "MC2-costbenefit"

COST_FLOOR = 1e-9


@dataclass(frozen=True)
class McConfig:
    t1: float = 200
    t2: float = 0.8
    t3: float = 0.4
    t4: float = 0.0
    t6: float = 1
    time_budget: float = 1.0  # seconds per trajectory
    # exact reward ties in the cost-benefit test go to S2 unless strict
    strict_gain: bool = False

    def __post_init__(self):
        if not (0 <= self.t2 <= 1 and 0 <= self.t3 <= 1):
            raise ValueError("t2 and t3 must lie in [0, 1]")
        if self.t1 < 0 or self.t6 < 0:
            raise ValueError("t1 and t6 must be non-negative")
        if not self.time_budget > 0:
            raise ValueError("time_budget must be positive")


@dataclass(frozen=True)
class McDecision:
    choice: str
    phase: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def invoke_s2(self) -> bool:
        return self.choice == INVOKE_S2


def performing_well(part: float, avg: float | None, t2: float) -> bool:
    """Sign-safe form of ``part / avg > t2``.

    With positive ``avg`` this is the plain ratio test. Rewards here are
    mostly negative sums, where dividing two negatives flips the meaning, so
    for negative ``avg`` the trajectory passes while ``part >= avg / t2``:
    it may be at most ``1/t2`` times as bad as past arrivals.
    """
    if avg is None:
        return False
    if avg > 0:
        return part > t2 * avg
    if avg < 0:
        if t2 == 0:
            return True
        return part >= avg / t2
    return part >= 0


def mc_decide(
    state: Cell,
    partial: TrajectoryRecord,
    proposal: S1Proposal,
    store: ExperienceStore,
    cfg: McConfig,
    elapsed: float,
    rng: np.random.Generator,
) -> McDecision:
    """Decide whether to adopt S1's proposal or invoke S2.

    ``elapsed`` is the time already spent on the current trajectory, in the
    same unit as ``cfg.time_budget``.
    """
    n_all = store.n_traj(state, "ALL")
    part = part_reward(partial)
    avg = store.avg_reward(state)
    well = performing_well(part, avg, cfg.t2)
    diag = {
        "n_all": n_all,
        "part_reward": part,
        "avg_reward": avg,
        "performing_well": well,
        "confidence": proposal.confidence,
    }
    if n_all > cfg.t1 and well and proposal.confidence > cfg.t3:
        return McDecision(ADOPT_S1, MC1, diag)

    rem = cfg.time_budget - elapsed
    diag["rem_time"] = rem
    if rem <= 0:
        diag["budget_exhausted"] = True
        return McDecision(ADOPT_S1, MC2_COST, diag)

    n_s2 = store.n_traj(state, "S2")
    diag["n_s2"] = n_s2
    if n_s2 <= cfg.t6:
        choice = INVOKE_S2 if rng.random() < 0.5 else ADOPT_S1
        return McDecision(choice, MC2_RANDOM, diag)

    exp_time = store.exp_time_s2() or 0.0
    cost = max(exp_time / rem, COST_FLOOR)
    r_s2 = store.exp_reward_s2(state)
    r_s1 = store.expected_reward(state, proposal.action)
    diag.update(exp_cost=cost, exp_reward_s2=r_s2, exp_reward_s1=r_s1)
    if cost > 1:
        return McDecision(ADOPT_S1, MC2_COST, diag)
    if r_s2 is None or r_s1 is None:
        # no record to compare against: take the careful route
        return McDecision(INVOKE_S2, MC2_COST, diag)
    gain = (r_s2 - r_s1) / cost
    diag["gain"] = gain
    if gain > cfg.t4 or (gain == cfg.t4 and not cfg.strict_gain):
        return McDecision(INVOKE_S2, MC2_COST, diag)
    return McDecision(ADOPT_S1, MC2_COST, diag)

