"""The fast experience-based solver (S1) and the MDFT deliberator (S2)."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .experience import ExperienceStore, confidence_value
from .grid import Action, Cell
from .mdft import DEFAULT_PHI1, DEFAULT_PHI2, FixedHorizon, MdftModel, Policy, deliberate
from .rl import QTable

MODES = ("01", "10", "02")
BALANCED = (0.5, 0.5)

# confidence reported when S1 has never seen any legal action at the state
FLOOR_CONFIDENCE = confidence_value(0.0, 0.0)


class S1Proposal(NamedTuple):
    action: Action
    confidence: float


class S2Result(NamedTuple):
    action: Action
    elapsed: float
    iterations: int


@dataclass(frozen=True)
class AttentionMode:
    """How S2 splits attention between the nominal and constrained Q columns.

    ``01`` looks only at constraints once more than ``violation_threshold``
    violations happened, ``10`` looks only at the goal once the trajectory
    runs longer than ``length_factor`` times the mean past length, ``02``
    always splits attention evenly.
    """

    mode: str = "02"
    violation_threshold: int = 2
    length_factor: float = 1.5

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"attention mode must be one of {MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class PartialContext:
    violations: int
    length: int
    # fallback reference length when the store has no finished trajectory
    diameter: int


def s1_propose(
    store: ExperienceStore,
    state: Cell,
    legal: Sequence[Action],
    rng: np.random.Generator,
    baseline: float = 0.0,
) -> S1Proposal:
    """``argmax_a (E(R|s,a) - baseline) * c(s,a)`` over the legal actions.

    With ``baseline=0`` this is the plain confidence-weighted expected reward.
    When rewards are mostly negative the product rewards low confidence, so
    the harness passes the worst single-move reward as ``baseline`` to keep
    every score non-negative. Actions never tried at ``state`` score 0. When
    no legal action has any data the proposal is a uniform draw with the
    floor confidence.
    """
    if not legal:
        raise ValueError("no legal action")
    best = -np.inf
    ties: list[Action] = []
    seen = False
    for a in legal:
        e = store.expected_reward(state, a)
        if e is None:
            score = 0.0
        else:
            seen = True
            score = (e - baseline) * store.confidence(state, a)
        if score > best:
            best, ties = score, [a]
        elif score == best:
            ties.append(a)
    if not seen:
        return S1Proposal(legal[int(rng.integers(len(legal)))], FLOOR_CONFIDENCE)
    a = ties[0] if len(ties) == 1 else ties[int(rng.integers(len(ties)))]
    return S1Proposal(Action(a), store.confidence(state, a))


def _minmax(col: np.ndarray) -> np.ndarray:
    lo, hi = col.min(), col.max()
    if hi == lo:
        return np.full_like(col, 0.5)
    return (col - lo) / (hi - lo)


def build_s2_model(
    q_nominal: QTable,
    q_constrained: QTable,
    state: Cell,
    legal: Sequence[Action],
    w,
    policy: Policy = FixedHorizon(30),
    phi1: float = DEFAULT_PHI1,
    phi2: float = DEFAULT_PHI2,
) -> MdftModel:
    """Options are the legal actions, attributes the two Q columns.

    Each column is min-max scaled over the legal set so the two value scales
    are comparable; a constant column becomes 0.5 everywhere.
    """
    try:
        cols = np.array(
            [[q_nominal.q(state, a), q_constrained.q(state, a)] for a in legal], dtype=float
        )
    except (KeyError, IndexError) as exc:
        raise ValueError(f"Q-tables do not cover {state}: {exc}") from None
    M = np.column_stack([_minmax(cols[:, 0]), _minmax(cols[:, 1])])
    return MdftModel(M, w, policy, phi1, phi2)


def attention_weights(mode: AttentionMode, context: PartialContext, store: ExperienceStore) -> tuple[float, float]:
    if mode.mode == "01":
        return (0.0, 1.0) if context.violations > mode.violation_threshold else BALANCED
    if mode.mode == "10":
        ref = store.mean_length()
        if ref is None:
            ref = context.diameter
        return (1.0, 0.0) if context.length > mode.length_factor * ref else BALANCED
    return BALANCED


def s2_propose(
    q_nominal: QTable,
    q_constrained: QTable,
    state: Cell,
    legal: Sequence[Action],
    w,
    rng: np.random.Generator,
    policy: Policy = FixedHorizon(30),
    phi1: float = DEFAULT_PHI1,
    phi2: float = DEFAULT_PHI2,
    clock=None,
) -> S2Result:
    """Deliberate over the legal actions; a single legal action skips MDFT."""
    now = clock.now if clock is not None else time.perf_counter
    t0 = now()
    if len(legal) == 1:
        return S2Result(Action(legal[0]), now() - t0, 0)
    model = build_s2_model(q_nominal, q_constrained, state, legal, w, policy, phi1, phi2)
    d = deliberate(model, rng)
    if clock is not None:
        clock.charge("s2_iteration", d.iterations * model.k)
    return S2Result(Action(legal[d.choice]), now() - t0, d.iterations)
