"""Trajectory generation for the seven agents."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._rand import Uniforms
from .clock import MonotonicClock
from .experience import ExperienceStore
from .grid import Action, GridSpec
from .mdft import DEFAULT_PHI1, DEFAULT_PHI2, FixedHorizon
from .metacog import McConfig, mc_decide
from .records import Step, TrajectoryRecord
from .rl import QTable, greedy_rollout
from .solvers import AttentionMode, PartialContext, attention_weights, s1_propose, s2_propose

AGENTS = ("RL-Nominal", "RL-Constrained", "S1-only", "S2-only", "SOFAI-01", "SOFAI-10", "SOFAI-02")
ALIASES = {"MDFT": "S2-only"}


def canonical_agent(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in AGENTS:
        raise ValueError(f"unknown agent {name!r}; expected one of {AGENTS}")
    return name


@dataclass(frozen=True)
class QPair:
    nominal: QTable
    constrained: QTable
    # training seconds per variant, kept apart from rollout wall times
    train_seconds: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class MdftParams:
    phi1: float = DEFAULT_PHI1
    phi2: float = DEFAULT_PHI2
    horizon: int = 30


def run_trajectory(
    kind: str,
    spec: GridSpec,
    q: QPair,
    store: ExperienceStore,
    rng: np.random.Generator,
    *,
    mc: McConfig = McConfig(),
    mode: AttentionMode = AttentionMode(),
    mdft: MdftParams = MdftParams(),
    max_steps: int = 200,
    clock=None,
    grid_id: str = "",
) -> TrajectoryRecord:
    """Generate one trajectory with ``kind`` in ``{"sofai", "s1", "s2"}``.

    The store is updated move by move and the trajectory is closed in it at
    the end, so successive calls accumulate experience.
    """
    if kind not in ("sofai", "s1", "s2"):
        raise ValueError(f"unknown trajectory kind {kind!r}")
    clock = clock or MonotonicClock()
    t = spec.tables
    env = Uniforms(rng, block=256)
    policy = FixedHorizon(mdft.horizon)
    traj = TrajectoryRecord(grid_id=grid_id, start=spec.start)
    t_start = clock.now()
    s = t.start
    violations = 0
    for _ in range(max_steps):
        cell = spec.cell(s)
        legal = [Action(a) for a in t.legal[s]]
        t0 = clock.now()
        phase = None
        invoke = kind == "s2"
        proposal = None
        if kind != "s2":
            proposal = s1_propose(store, cell, legal, rng, spec.worst_move_reward)
            clock.charge("s1", len(legal))
        if kind == "sofai":
            decision = mc_decide(cell, traj, proposal, store, mc, clock.now() - t_start, rng)
            clock.charge("mc")
            invoke = decision.invoke_s2
            phase = decision.phase
        s2_time = None
        if invoke:
            ctx = PartialContext(violations=violations, length=traj.length, diameter=spec.diameter)
            w = attention_weights(mode, ctx, store)
            res = s2_propose(q.nominal, q.constrained, cell, legal, w, rng, policy, mdft.phi1, mdft.phi2, clock)
            action, s2_time, solver = res.action, res.elapsed, "S2"
        else:
            action, solver = proposal.action, "S1"
        dt = clock.now() - t0
        a = int(action)
        s_next, _ = t.transition(s, a, env(), env())
        v = t.violations(a, s_next)
        violations += v
        store.record_step(
            traj,
            Step(
                state=cell,
                action=action,
                next_state=spec.cell(s_next),
                reward=t.reward(a, s_next),
                solver=solver,
                decision_time=dt,
                violations=v,
                s2_time=s2_time,
                phase=phase,
            ),
        )
        s = s_next
        if s == t.goal:
            traj.finished = True
            break
    traj.wall_time = clock.now() - t_start
    store.finish_trajectory(traj)
    return traj


def run_sofai_trajectory(spec, q, store, mc, mode, rng, **kwargs) -> TrajectoryRecord:
    return run_trajectory("sofai", spec, q, store, rng, mc=mc, mode=mode, **kwargs)


def run_agent(
    agent: str,
    spec: GridSpec,
    q: QPair,
    n_trajectories: int,
    rng: np.random.Generator,
    *,
    mc: McConfig = McConfig(),
    attention: AttentionMode = AttentionMode(),
    s2_only_mode: str = "02",
    mdft: MdftParams = MdftParams(),
    max_steps: int = 200,
    clock=None,
    grid_id: str = "",
) -> list[TrajectoryRecord]:
    """Generate ``n_trajectories`` for one agent with a private experience store."""
    agent = canonical_agent(agent)
    clock = clock or MonotonicClock()
    out = []
    store = ExperienceStore()
    for i in range(n_trajectories):
        if agent.startswith("RL-"):
            table = q.nominal if agent == "RL-Nominal" else q.constrained
            traj = greedy_rollout(spec, table, rng, max_steps, grid_id=grid_id, clock=clock)
        else:
            if agent == "S1-only":
                kind, mode = "s1", attention
            elif agent == "S2-only":
                kind, mode = "s2", AttentionMode(s2_only_mode, attention.violation_threshold, attention.length_factor)
            else:
                kind = "sofai"
                mode = AttentionMode(agent.split("-")[1], attention.violation_threshold, attention.length_factor)
            traj = run_trajectory(
                kind, spec, q, store, rng,
                mc=mc, mode=mode, mdft=mdft, max_steps=max_steps, clock=clock, grid_id=grid_id,
            )
        traj.agent = agent
        traj.index = i
        out.append(traj)
    return out
