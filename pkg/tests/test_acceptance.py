"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line; the lines are repeated in the
terminal summary. Criteria 5 to 8 share one experiment: three grids, 1000
trajectories per agent, all seven agents, default thresholds, master seed 0.
"""
import json

import numpy as np
import pytest
from scipy import stats

from sofai.cli import main
from sofai.config import ExperimentConfig
from sofai.experience import ExperienceStore, confidence_value
from sofai.grid import Action, GridSpec, shortest_path_length, step
from sofai.harness import moving_average, run_experiment, usage_series
from sofai.mdft import FixedHorizon, MdftModel, choice_distribution, valence
from sofai.metacog import ADOPT_S1, INVOKE_S2, MC1, MC2_COST, MC2_RANDOM, McConfig, mc_decide
from sofai.records import Step, TrajectoryRecord
from sofai.rl import RlHyperparams, greedy_rollout, train
from sofai.solvers import FLOOR_CONFIDENCE, S1Proposal

from oracles import bfs_distance, mdft_enumeration, tv_distance
from test_metacog import StubStore, partial

SOFAI = "SOFAI-01"
WINDOW = 50


@pytest.fixture(scope="module")
def experiment():
    cfg = ExperimentConfig(grid_count=3, trajectories_per_agent=1000, master_seed=0)
    return run_experiment(cfg)


def test_criterion_01_valence_exactness(criterion):
    # taste column (1, 5, 2); the second column is not attended so any values do
    model = MdftModel([[1.0, 5.0], [5.0, 1.0], [2.0, 3.0]], [0.55, 0.45])
    v = valence(model, [1, 0])
    criterion(1, v.tolist() == [-2.5, 3.5, -1.0], f"valence = {v.tolist()}")


def test_criterion_02_mdft_oracle(criterion):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(50):
        k = int(rng.integers(2, 5))
        T = int(rng.integers(1, 5))
        M = rng.uniform(0, 10, size=(k, 2))
        p = rng.uniform(0.05, 0.95)
        model = MdftModel(M, [p, 1 - p], FixedHorizon(T))
        exact = mdft_enumeration(M, [p, 1 - p], model.S, T)
        est = choice_distribution(model, 100_000, rng)
        worst = max(worst, tv_distance(exact, est))
    criterion(2, worst <= 0.02, f"max TV distance over 50 models = {worst:.5f} (limit 0.02)")


def test_criterion_03_slip(criterion):
    spec = GridSpec(width=9, height=9, start=(0, 0), goal=(8, 8))
    rng = np.random.default_rng(3)
    intended = (4, 5)
    dest = []
    slips = 0
    for _ in range(100_000):
        out = step(spec, (4, 4), Action.E, rng)
        if out.slipped:
            slips += 1
            dest.append(out.next_state)
    rate = slips / 100_000
    cells = sorted(set(dest))
    counts = [dest.count(c) for c in cells]
    p = stats.chisquare(counts).pvalue
    ok = 0.09 <= rate <= 0.11 and intended not in cells and len(cells) == 7 and p > 0.01
    criterion(3, ok, f"slip rate {rate:.4f}, {len(cells)} destinations, chi-square p = {p:.3f}")


def test_criterion_04_rl_sanity(criterion):
    results = []
    for start, goal in [((0, 0), (4, 2)), ((4, 4), (0, 1)), ((2, 0), (2, 4))]:
        spec = GridSpec(width=5, height=5, start=start, goal=goal, slip_probability=0.0)
        q = train(spec, "nominal", RlHyperparams(), np.random.default_rng(4))
        got = greedy_rollout(spec, q, np.random.default_rng(5)).length
        best = bfs_distance(5, 5, start, goal)
        assert best == shortest_path_length(spec)
        results.append((got, best))
    criterion(4, all(g == b for g, b in results), f"greedy vs BFS lengths {results}")


def test_criterion_05_usage_crossover(experiment, criterion):
    report = experiment.report
    details, good = [], 0
    for g in report.summary["grids"]:
        u = usage_series(report.trajectories[(g, SOFAI)])[:, 0]
        smooth = moving_average(u, WINDOW)
        full = np.arange(len(smooth)) >= WINDOW - 1
        starts_low = bool(np.any(smooth[WINDOW - 1 : 100] < 0.5))
        above = np.nonzero(full & (smooth > 0.5))[0]
        first = int(above[0]) if len(above) else None
        ok = starts_low and first is not None and 100 <= first <= 900
        good += ok
        details.append(f"{g}: start {smooth[WINDOW - 1]:.2f}, crossover {first}")
    criterion(5, good >= 2, f"{good}/3 grids; " + "; ".join(details))


def test_criterion_06_reward_and_length_ordering(experiment, criterion):
    overall = experiment.report.summary["overall"]
    sofai = overall[SOFAI]["tail_mean_reward"]
    s1 = overall["S1-only"]["tail_mean_reward"]
    lengths = {a: overall[a]["mean_length"] for a in overall}
    shortest = min(lengths, key=lengths.get)
    others = [lengths[a] for a in lengths if a != "RL-Nominal"]
    ok = sofai > s1 and lengths["RL-Nominal"] < min(others)
    criterion(
        6,
        ok,
        f"tail reward SOFAI-01 {sofai:.1f} vs S1-only {s1:.1f}; shortest mean length {shortest} "
        f"({lengths['RL-Nominal']:.2f} vs next {min(others):.2f})",
    )


def test_criterion_07_time_ordering(experiment, criterion):
    summary = experiment.report.summary
    s2_slower, cheaper, details = 0, 0, []
    for g in summary["grids"]:
        dt = summary["decision_time"][g][SOFAI]
        total_sofai = summary["per_grid"][g][SOFAI]["total_wall_time"]
        total_s2 = summary["per_grid"][g]["S2-only"]["total_wall_time"]
        s2_slower += dt["S2"] > dt["S1"]
        cheaper += total_sofai < total_s2
        details.append(f"{g}: S2/S1 move time x{dt['S2'] / dt['S1']:.1f}, run time {total_sofai:.2f}s vs {total_s2:.2f}s")
    n = len(summary["grids"])
    criterion(7, s2_slower == n and cheaper >= 2, "; ".join(details))


def test_criterion_08_js_divergence(experiment, criterion):
    table = experiment.report.summary["js_divergence"]
    wins = sum(table[g][SOFAI] < table[g]["S1-only"] for g in table)
    details = "; ".join(f"{g}: {table[g][SOFAI]:.3f} vs {table[g]['S1-only']:.3f}" for g in table)
    criterion(8, wins >= 2, f"{wins}/3 grids; {details}")


def test_criterion_09_formula_units(criterion):
    checks = {}
    checks["confidence(r=0.5)"] = all(confidence_value(0.5, s) == 0.5 for s in (0.0, 1.0, 25.0, 1e6))
    store = ExperienceStore()
    traj = TrajectoryRecord(grid_id="g", start=(0, 0))
    for r in (-4.0, -4.0, -54.0):
        store.record_step(traj, Step((0, 0), Action.E, (0, 1), r, "S1"))
    checks["expected_reward"] = abs(store.expected_reward((0, 0), Action.E) - (-62 / 3)) <= 1e-9

    rng = np.random.default_rng(9)
    coin = [mc_decide((1, 1), partial(0), S1Proposal(Action.E, FLOOR_CONFIDENCE), ExperienceStore(),
                      McConfig(), 0.0, rng) for _ in range(10_000)]
    freq = sum(d.invoke_s2 for d in coin) / 10_000
    checks["fresh store coin"] = all(d.phase == MC2_RANDOM for d in coin) and abs(freq - 0.5) <= 0.02
    d = mc_decide((1, 1), partial(-45.0), S1Proposal(Action.E, 0.9), StubStore(n_all=500, n_s2=50, avg=-50.0),
                  McConfig(), 0.0, rng)
    checks["MC1 adopt"] = (d.choice, d.phase) == (ADOPT_S1, MC1)
    cheap = StubStore(n_all=50, n_s2=10, avg=-20.0, r_s2=-10.0, r_s1=-30.0, t_s2=0.005)
    d = mc_decide((1, 1), partial(-4.0), S1Proposal(Action.E, 0.9), cheap, McConfig(), 0.0, rng)
    checks["MC2 invoke"] = (d.choice, d.phase) == (INVOKE_S2, MC2_COST) and d.diagnostics["gain"] == pytest.approx(4000)
    costly = StubStore(n_all=50, n_s2=10, avg=-20.0, r_s2=-10.0, r_s1=-30.0, t_s2=2.0)
    d = mc_decide((1, 1), partial(-4.0), S1Proposal(Action.E, 0.9), costly, McConfig(), 0.0, rng)
    checks["MC2 skip"] = (d.choice, d.phase) == (ADOPT_S1, MC2_COST)
    failed = [k for k, v in checks.items() if not v]
    criterion(9, not failed, f"{len(checks) - len(failed)}/{len(checks)} unit checks" + (f", failed {failed}" if failed else ""))


def test_criterion_10_determinism(tmp_path, criterion):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "grid_count": 2,
        "trajectories_per_agent": 200,
        "master_seed": 11,
        "clock": "virtual",
        "rl": {"episodes": 5000},
    }))
    outputs = []
    for run in ("first", "second"):
        out = tmp_path / run
        for stage in ("gen-grids", "train", "run"):
            assert main([stage, "--config", str(config), "--out", str(out)]) == 0
        outputs.append((out / "metrics.csv").read_bytes())
    same = outputs[0] == outputs[1]
    criterion(10, same, f"metrics.csv {len(outputs[0])} bytes, identical across runs: {same}")
