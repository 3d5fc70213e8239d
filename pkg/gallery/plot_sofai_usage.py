"""
How SOFAI shifts from deliberation to habit
===========================================

On one grid, run SOFAI with constraint-focused attention for 1000
trajectories and follow the smoothed share of moves decided by the fast
solver. Early on the arbiter leans on MDFT; once a state has been visited
often enough and the fast proposal is trusted, habit takes over.
"""

import numpy as np

from sofai.config import ExperimentConfig
from sofai.harness import crossover_index, moving_average, run_experiment, usage_series

cfg = ExperimentConfig(grid_count=1, master_seed=0, agents=("S1-only", "S2-only", "SOFAI-01"))
exp = run_experiment(cfg)
report = exp.report
grid = report.summary["grids"][0]

trajs = report.trajectories[(grid, "SOFAI-01")]
s1 = moving_average(usage_series(trajs)[:, 0], 50)
print("trajectory  smoothed fast-solver share")
for i in range(49, len(s1), 100):
    bar = "#" * int(round(40 * s1[i]))
    print(f"{i:10d}  {s1[i]:5.2f} {bar}")
print("crossover at trajectory", crossover_index(trajs, 50))

# %%
# Reward and time over the last 200 trajectories, next to the two baselines.
print(f"\n{'agent':10s} {'tail reward':>12s} {'tail length':>12s} {'total time (s)':>15s}")
for agent, stats in report.summary["per_grid"][grid].items():
    print(f"{agent:10s} {stats['tail_mean_reward']:12.1f} {stats['tail_mean_length']:12.2f} "
          f"{stats['total_wall_time']:15.3f}")

# %%
# Per-move decision time by solver inside SOFAI.
dt = report.summary["decision_time"][grid]["SOFAI-01"]
print("\nmean decision time: " + ", ".join(f"{k} {v * 1e6:.0f} us" for k, v in dt.items()))
print("JS divergence from MDFT-only paths:",
      {a: round(v, 3) for a, v in report.summary["js_divergence"][grid].items()})
