import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sofai.experience import ExperienceStore, RunningStats, confidence_value, part_reward
from sofai.grid import Action, random_grid, step as env_step
from sofai.metacog import performing_well
from sofai.records import Step, TrajectoryRecord

A, B = (0, 0), (1, 1)


def play(store, start, moves, finish=True):
    """Record ``(state, action, next_state, reward, solver[, s2_time])`` tuples as one trajectory."""
    traj = TrajectoryRecord(grid_id="g", start=start)
    for m in moves:
        s, a, n, r, solver = m[:5]
        s2_time = m[5] if len(m) > 5 else None
        store.record_step(traj, Step(s, Action(a), n, r, solver, s2_time=s2_time))
    if finish:
        store.finish_trajectory(traj)
    return traj


def test_empty_store_has_no_data():
    store = ExperienceStore()
    for scope in ("S1", "S2", "ALL"):
        assert store.n_traj(A, scope) == 0
    assert store.avg_reward(A) is None
    assert store.expected_reward(A, Action.E) is None
    assert store.exp_reward_s2(A) is None
    assert store.exp_time_s2() is None
    assert store.mean_length() is None


def test_first_step_counts_once():
    store = ExperienceStore()
    play(store, A, [(A, Action.SE, B, -4, "S1")], finish=False)
    assert store.n_traj(A, "ALL") == 1


def test_adoption_counts_by_scope():
    store = ExperienceStore()
    moves = [(A, Action.E, (0, 1), -4, "S1")] * 3 + [(A, Action.S, (1, 0), -4, "S2")] * 2
    play(store, A, moves)
    assert (store.n_traj(A, "S1"), store.n_traj(A, "S2"), store.n_traj(A, "ALL")) == (3, 2, 5)
    with pytest.raises(ValueError):
        store.n_traj(A, "RL")


def test_s2_time_mean_includes_new_sample():
    store = ExperienceStore()
    play(store, A, [(A, Action.E, (0, 1), -4, "S2", 0.002)], finish=False)
    assert store.exp_time_s2() == 0.002
    play(store, A, [(A, Action.E, (0, 1), -4, "S2", 0.004)], finish=False)
    assert store.exp_time_s2() == pytest.approx(0.003)


def test_total_reward_matches_environment_sum():
    spec = random_grid(np.random.default_rng(0))
    rng = np.random.default_rng(1)
    store = ExperienceStore()
    traj = TrajectoryRecord(grid_id="g", start=spec.start)
    s = spec.start
    env_total = 0.0
    for _ in range(40):
        a = Action(int(rng.choice(list(spec.tables.legal[spec.index(s)]))))
        out = env_step(spec, s, a, rng)
        env_total += out.reward
        store.record_step(traj, Step(s, a, out.next_state, out.reward, "S1"))
        s = out.next_state
        if out.done:
            break
    assert traj.total_reward == env_total
    assert traj.length == len(traj.steps)


def test_part_reward_of_empty_trajectory():
    assert part_reward(TrajectoryRecord(grid_id="g", start=A)) == 0


def test_avg_reward_uses_first_arrival():
    store = ExperienceStore()
    play(store, A, [(A, Action.SE, B, -20, "S1")])
    play(store, A, [(A, Action.E, (0, 1), -36, "S1"), ((0, 1), Action.SW, B, -4, "S1"),
                    (B, Action.NW, A, -4, "S1"), (A, Action.SE, B, -4, "S1")])
    assert store.avg_reward(B) == -30
    # the start counts as an arrival with nothing accumulated
    assert store.avg_reward(A) == 0


def test_in_progress_trajectory_does_not_move_avg_reward():
    store = ExperienceStore()
    play(store, A, [(A, Action.SE, B, -20, "S1")])
    play(store, A, [(A, Action.SE, B, -80, "S1")], finish=False)
    assert store.avg_reward(B) == -20


def test_missing_avg_reward_fails_the_performance_test():
    store = ExperienceStore()
    assert store.avg_reward(B) is None
    assert not performing_well(-4.0, store.avg_reward(B), 0.8)


def test_expected_reward_example():
    store = ExperienceStore()
    play(store, A, [(A, Action.E, (0, 1), r, "S1") for r in (-4, -4, -54)])
    assert store.expected_reward(A, Action.E) == pytest.approx(-62 / 3, abs=1e-12)


def test_single_and_constant_samples():
    store = ExperienceStore()
    play(store, A, [(A, Action.E, (0, 1), -7, "S1")])
    assert store.expected_reward(A, Action.E) == -7
    assert store.reward_std(A, Action.E) == 0
    play(store, A, [(A, Action.E, (0, 1), -7, "S1")] * 3)
    assert store.expected_reward(A, Action.E) == -7
    assert store.reward_std(A, Action.E) == 0


def test_confidence_at_even_odds_is_one_half():
    store = ExperienceStore()
    play(store, A, [(A, Action.E, (0, 1), -4, "S1"), (A, Action.S, (1, 0), -54, "S1")])
    assert store.confidence(A, Action.E) == 0.5
    assert confidence_value(0.5, 123.0) == 0.5


def test_confidence_saturates_for_a_reliable_habit():
    store = ExperienceStore()
    play(store, A, [(A, Action.E, (0, 1), -4, "S1")] * 4)
    assert store.confidence(A, Action.E) > 0.999


def test_confidence_with_wide_spread():
    store = ExperienceStore()
    moves = [(A, Action.E, (0, 1), r, "S1") for r in (0, 50, 0, 50)]
    moves.append((A, Action.S, (1, 0), -4, "S1"))
    play(store, A, moves)
    assert store.action_frequency(A, Action.E) == 0.8
    assert store.reward_std(A, Action.E) == 25
    c = store.confidence(A, Action.E)
    assert c == 1 / (1 + math.exp(-0.3 / (25 + 1e-10)))
    assert c == pytest.approx(0.503, abs=5e-4)


def test_untried_action_has_minimal_confidence():
    store = ExperienceStore()
    play(store, A, [(A, Action.E, (0, 1), -4, "S1")])
    assert store.confidence(A, Action.S) == confidence_value(0.0, 0.0)
    assert store.confidence(A, Action.S) < 1e-100


def test_exp_reward_s2():
    store = ExperienceStore()
    assert store.exp_reward_s2(A) is None
    play(store, A, [(A, Action.E, (0, 1), -4, "S2"), (A, Action.S, (1, 0), 6, "S2"),
                    (A, Action.S, (1, 0), 100, "S1")])
    assert store.exp_reward_s2(A) == 1


@given(st.lists(st.floats(-200, 20, allow_nan=False), min_size=1, max_size=60))
def test_running_mean_equals_recomputation(xs):
    rs = RunningStats()
    for i, x in enumerate(xs, 1):
        rs.add(x)
        assert rs.mean == sum(xs[:i]) / i
    assert rs.std == pytest.approx(float(np.std(xs)), abs=1e-9 * max(1.0, max(map(abs, xs))))


CELLS = [(r, c) for r in range(3) for c in range(3)]
step_strategy = st.tuples(
    st.sampled_from(CELLS),
    st.sampled_from(list(Action)),
    st.sampled_from(CELLS),
    st.sampled_from([-154.0, -104.0, -54.0, -4.0, 6.0, -7.5]),
    st.sampled_from(["S1", "S2"]),
    st.one_of(st.none(), st.floats(0, 0.01)),
)
history_strategy = st.lists(st.lists(step_strategy, min_size=0, max_size=12), min_size=1, max_size=8)


def build(history):
    store = ExperienceStore()
    for moves in history:
        play(store, moves[0][0] if moves else A, moves)
    return store


@settings(max_examples=80, deadline=None)
@given(history_strategy)
def test_store_properties(history):
    store = build(history)
    for s in CELLS:
        assert store.n_traj(s, "ALL") == store.n_traj(s, "S1") + store.n_traj(s, "S2")
        for a in Action:
            samples = store.reward_samples.get((s, a))
            if samples:
                e = store.expected_reward(s, a)
                assert min(samples) - 1e-9 <= e <= max(samples) + 1e-9
            c = store.confidence(s, a)
            # mathematically open interval; doubles saturate at the ends
            assert 0.0 <= c <= 1.0
    t = store.exp_time_s2()
    assert t is None or t >= 0


@settings(max_examples=60, deadline=None)
@given(history_strategy)
def test_replay_and_serialization_are_exact(history):
    store = build(history)
    assert ExperienceStore.replay(store.trajectory_log).summary() == store.summary()
    log, snap = io.StringIO(), io.StringIO()
    store.dump(log, snap)
    loaded = ExperienceStore.load(io.StringIO(log.getvalue()))
    assert loaded.summary() == store.summary()
    for s in CELLS:
        assert loaded.avg_reward(s) == store.avg_reward(s)
        for a in Action:
            assert loaded.confidence(s, a) == store.confidence(s, a)
    assert snap.getvalue()


def test_trajectory_record_rejects_inconsistent_totals():
    traj = play(ExperienceStore(), A, [(A, Action.SE, B, -4, "S1")])
    d = traj.to_dict()
    d["total_reward"] = 0
    with pytest.raises(ValueError):
        TrajectoryRecord.from_dict(d)
