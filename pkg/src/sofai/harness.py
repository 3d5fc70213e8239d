"""Experiment orchestration and trajectory-level analysis."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .agents import AGENTS, QPair, run_agent
from .clock import make_clock
from .config import ExperimentConfig
from .grid import GridSpec, random_grid, shortest_path_length
from .records import TrajectoryRecord
from .rl import train
from .solvers import AttentionMode

# stable stream keys for numpy SeedSequence
_GRID, _TRAIN, _AGENT = 0, 1, 2
_VARIANT_KEY = {"nominal": 0, "constrained": 1}
MAX_GRID_RETRIES = 100
REFERENCE_AGENT = "S2-only"
METRICS_COLUMNS = ("agent", "grid", "index", "length", "reward", "wall_time", "s1_fraction")


def grid_id(i: int) -> str:
    return f"grid_{i:03d}"


def stream(master_seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng([master_seed, *key])


def generate_grids(cfg: ExperimentConfig) -> list[GridSpec]:
    """Draw ``grid_count`` grids, redrawing any with an unreachable goal."""
    grids = []
    for g in range(cfg.grid_count):
        for attempt in range(MAX_GRID_RETRIES):
            spec = random_grid(stream(cfg.master_seed, _GRID, g, attempt), cfg.grid)
            if shortest_path_length(spec) is not None:
                grids.append(spec)
                break
        else:
            raise RuntimeError(f"no solvable grid after {MAX_GRID_RETRIES} draws")
    return grids


def train_pair(cfg: ExperimentConfig, spec: GridSpec, g: int) -> QPair:
    tables, seconds = {}, {}
    for v in ("nominal", "constrained"):
        t0 = time.perf_counter()
        tables[v] = train(spec, v, cfg.rl, stream(cfg.master_seed, _TRAIN, g, _VARIANT_KEY[v]))
        seconds[v] = time.perf_counter() - t0
    return QPair(tables["nominal"], tables["constrained"], seconds)


def _run_one(args) -> list[TrajectoryRecord]:
    cfg, spec, q, g, agent = args
    return run_agent(
        agent,
        spec,
        q,
        cfg.trajectories_per_agent,
        stream(cfg.master_seed, _AGENT, g, AGENTS.index(agent)),
        mc=cfg.mc,
        attention=AttentionMode("02", cfg.attention.violation_threshold, cfg.attention.length_factor),
        s2_only_mode=cfg.attention.s2_only_mode,
        mdft=cfg.mdft,
        max_steps=cfg.max_steps_per_trajectory,
        clock=make_clock(cfg.clock, cfg.virtual_costs),
        grid_id=grid_id(g),
    )


def run_trajectories(
    cfg: ExperimentConfig,
    grids: Sequence[GridSpec],
    qtables: Sequence[QPair],
    jobs: int = 1,
) -> list[TrajectoryRecord]:
    """All agents on all grids, in canonical (grid, agent, index) order."""
    tasks = [(cfg, spec, q, g, agent) for g, (spec, q) in enumerate(zip(grids, qtables)) for agent in cfg.agent_order]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]
    return [traj for chunk in results for traj in chunk]


# -- analysis ------------------------------------------------------------

def edge_counts(trajectories: Iterable[TrajectoryRecord]) -> Counter:
    return Counter((s.state, s.next_state) for t in trajectories for s in t.steps)


def js_divergence(set_a: Sequence[TrajectoryRecord], set_b: Sequence[TrajectoryRecord]) -> float:
    """Base-2 Jensen-Shannon divergence between directed-edge distributions.

    Each set becomes a distribution over ``(state, next_state)`` traversals
    with add-one smoothing over the union of both supports.
    """
    if not set_a or not set_b:
        raise ValueError("both trajectory sets must be non-empty")
    grids = {t.grid_id for t in set_a} | {t.grid_id for t in set_b}
    if len(grids) > 1:
        raise ValueError(f"trajectories come from different grids: {sorted(grids)}")
    ca, cb = edge_counts(set_a), edge_counts(set_b)
    support = sorted(set(ca) | set(cb))
    if not support:
        return 0.0
    p = np.array([ca[e] + 1.0 for e in support])
    q = np.array([cb[e] + 1.0 for e in support])
    return jsd(p / p.sum(), q / q.sum())


def jsd(p: np.ndarray, q: np.ndarray) -> float:
    m = 0.5 * (p + q)

    def kl(x):
        nz = x > 0
        return float(np.sum(x[nz] * np.log2(x[nz] / m[nz])))

    return min(max(0.5 * kl(p) + 0.5 * kl(q), 0.0), 1.0)


def usage_series(trajectories: Sequence[TrajectoryRecord]) -> np.ndarray:
    """``n x 2`` array of per-trajectory (S1, S2) move fractions."""
    return np.array([t.usage() for t in trajectories], dtype=float).reshape(-1, 2)


def moving_average(series, window: int = 50) -> np.ndarray:
    """Trailing mean over up to ``window`` points; output has the input's length."""
    x = np.asarray(series, dtype=float)
    if window < 1:
        raise ValueError("window must be positive")
    # direct window sums rather than cumsum differences, so window 1 is exact
    sums = np.convolve(x, np.ones(window))[: len(x)]
    counts = np.minimum(np.arange(1, len(x) + 1), window)
    return sums / counts


def crossover_index(trajectories: Sequence[TrajectoryRecord], window: int = 50) -> int | None:
    """First trajectory where smoothed S1 usage exceeds smoothed S2 usage.

    Only full windows count, so the earliest possible answer is ``window - 1``.
    """
    u = usage_series(trajectories)
    if len(u) < window:
        return None
    s1, s2 = moving_average(u[:, 0], window), moving_average(u[:, 1], window)
    hits = np.nonzero(s1[window - 1 :] > s2[window - 1 :])[0]
    return int(hits[0]) + window - 1 if len(hits) else None


def _mean(xs) -> float | None:
    xs = list(xs)
    return math.fsum(xs) / len(xs) if xs else None


def _agent_stats(trajs: Sequence[TrajectoryRecord], tail: int) -> dict:
    tail_trajs = trajs[-tail:]
    return {
        "trajectories": len(trajs),
        "mean_length": _mean(t.length for t in trajs),
        "mean_reward": _mean(t.total_reward for t in trajs),
        "mean_wall_time": _mean(t.wall_time for t in trajs),
        "total_wall_time": math.fsum(t.wall_time for t in trajs),
        "finished_fraction": _mean(float(t.finished) for t in trajs),
        "mean_violations": _mean(t.violations for t in trajs),
        "tail_mean_reward": _mean(t.total_reward for t in tail_trajs),
        "tail_mean_length": _mean(t.length for t in tail_trajs),
    }


def _decision_times(trajs: Sequence[TrajectoryRecord]) -> dict:
    by = defaultdict(list)
    for t in trajs:
        for s in t.steps:
            by[s.solver].append(s.decision_time)
    return {k: _mean(v) for k, v in sorted(by.items())}


@dataclass
class MetricsReport:
    trajectories: dict = field(default_factory=dict)  # (grid, agent) -> list
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def series(self, grid: str, agent: str, attr: str) -> np.ndarray:
        return np.array([getattr(t, attr) for t in self.trajectories[(grid, agent)]], dtype=float)

    def metrics_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(METRICS_COLUMNS)
        w.writerows(self.rows)
        return buf.getvalue()

    def summary_json(self) -> str:
        return json.dumps(self.summary, indent=2, sort_keys=True) + "\n"


def analyze(
    trajectories: Iterable[TrajectoryRecord],
    window: int = 50,
    tail: int = 200,
) -> MetricsReport:
    """Build the per-trajectory rows and the aggregate summary from records alone."""
    groups: dict = defaultdict(list)
    for t in trajectories:
        groups[(t.grid_id, t.agent)].append(t)
    order = {a: i for i, a in enumerate(AGENTS)}
    keys = sorted(groups, key=lambda k: (k[0], order.get(k[1], len(order)), k[1]))
    report = MetricsReport(trajectories={k: groups[k] for k in keys})
    for key in keys:
        for t in groups[key]:
            s1 = "" if t.agent.startswith("RL-") else repr(t.usage()[0])
            report.rows.append((t.agent, t.grid_id, t.index, t.length, repr(t.total_reward), repr(t.wall_time), s1))

    grids = sorted({g for g, _ in keys})
    agents = sorted({a for _, a in keys}, key=lambda a: order.get(a, len(order)))
    per_grid = {}
    jsd_table = {}
    usage = {}
    times = {}
    for g in grids:
        per_grid[g] = {a: _agent_stats(groups[(g, a)], tail) for a in agents if (g, a) in groups}
        ref = groups.get((g, REFERENCE_AGENT))
        if ref:
            jsd_table[g] = {
                a: js_divergence(groups[(g, a)], ref) for a in agents if (g, a) in groups and a != REFERENCE_AGENT
            }
        usage[g] = {}
        times[g] = {}
        for a in agents:
            if (g, a) not in groups:
                continue
            times[g][a] = _decision_times(groups[(g, a)])
            if a.startswith("SOFAI"):
                u = usage_series(groups[(g, a)])
                usage[g][a] = {
                    "crossover": crossover_index(groups[(g, a)], window),
                    "mean_s1_fraction": _mean(u[:, 0]),
                    "smoothed_s1_fraction": moving_average(u[:, 0], window)[window - 1 :: window].tolist(),
                }
    overall = {}
    for a in agents:
        pooled = [t for g in grids for t in groups.get((g, a), [])]
        tails = [t for g in grids for t in groups.get((g, a), [])[-tail:]]
        overall[a] = _agent_stats(pooled, tail)
        overall[a]["tail_mean_reward"] = _mean(t.total_reward for t in tails)
        overall[a]["tail_mean_length"] = _mean(t.length for t in tails)
    jsd_mean = {
        a: _mean(jsd_table[g][a] for g in jsd_table if a in jsd_table[g])
        for a in agents
        if a != REFERENCE_AGENT and any(a in jsd_table[g] for g in jsd_table)
    }
    report.summary = {
        "grids": grids,
        "agents": agents,
        "moving_average_window": window,
        "tail_window": tail,
        "overall": overall,
        "per_grid": per_grid,
        "js_divergence": jsd_table,
        "js_divergence_mean": jsd_mean,
        "usage": usage,
        "decision_time": times,
    }
    return report


@dataclass
class Experiment:
    """Everything a run produces: grids, Q-tables and the report."""

    config: ExperimentConfig
    grids: list
    qtables: list
    report: MetricsReport

    def write(self, out: str | Path) -> None:
        write_outputs(self.report, out)


def run_experiment(
    cfg: ExperimentConfig,
    grids: Sequence[GridSpec] | None = None,
    qtables: Sequence[QPair] | None = None,
    jobs: int = 1,
) -> Experiment:
    """Generate grids, train both Q-tables per grid and run every agent.

    Pass ``grids``/``qtables`` to reuse artifacts from earlier stages.
    """
    grids = list(grids) if grids is not None else generate_grids(cfg)
    if qtables is None:
        qtables = [train_pair(cfg, spec, g) for g, spec in enumerate(grids)]
    trajs = run_trajectories(cfg, grids, qtables, jobs)
    report = analyze(trajs, cfg.moving_average_window, cfg.tail_window)
    return Experiment(cfg, grids, list(qtables), report)


# -- files ---------------------------------------------------------------

def write_trajectories(trajectories: Iterable[TrajectoryRecord], path: str | Path) -> None:
    with open(path, "w") as fh:
        for t in trajectories:
            fh.write(json.dumps(t.to_dict(), sort_keys=True) + "\n")


class LogError(ValueError):
    pass


def read_trajectories(path: str | Path) -> list[TrajectoryRecord]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(TrajectoryRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise LogError(f"{path}:{lineno}: bad trajectory record ({exc})") from None
    return out


def write_outputs(report: MetricsReport, out: str | Path) -> None:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    write_trajectories((t for ts in report.trajectories.values() for t in ts), out / "trajectories.ndjson")
    (out / "metrics.csv").write_text(report.metrics_csv())
    (out / "summary.json").write_text(report.summary_json())
