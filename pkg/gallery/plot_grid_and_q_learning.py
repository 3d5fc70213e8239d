"""
A constrained grid and two Q-learners
=====================================

Draw a 9x9 grid with constrained cells, colored cells and two penalized
directions, then compare a learner that sees the penalties with one that
only pays for moves.
"""

import numpy as np

from sofai.grid import GridParams, random_grid, shortest_path_length
from sofai.rl import RlHyperparams, greedy_rollout, train

rng = np.random.default_rng(7)
spec = random_grid(rng, GridParams())


def draw(spec, path=()):
    on_path = {s.next_state for s in path}
    rows = []
    for r in range(spec.height):
        row = ""
        for c in range(spec.width):
            cell = (r, c)
            if cell == spec.start:
                ch = "S"
            elif cell == spec.goal:
                ch = "G"
            elif cell in on_path:
                ch = "*"
            elif cell in spec.constrained_states:
                ch = "#"
            elif spec.features.get(cell) == "green":
                ch = "g"
            elif spec.features.get(cell) == "blue":
                ch = "b"
            else:
                ch = "."
            row += ch + " "
        rows.append(row)
    return "\n".join(rows)


print(draw(spec))
print("penalized directions:", sorted(a.name for a in spec.constrained_actions))
print("shortest path:", shortest_path_length(spec), "moves")

# %%
# Training both variants takes a few seconds with the default 40000 episodes.
hp = RlHyperparams()
tables = {v: train(spec, v, hp, np.random.default_rng(1)) for v in ("nominal", "constrained")}

for variant, q in tables.items():
    trajs = [greedy_rollout(spec, q, rng) for _ in range(500)]
    length = np.mean([t.length for t in trajs])
    reward = np.mean([t.total_reward for t in trajs])
    viol = np.mean([t.violations for t in trajs])
    print(f"\n{variant:11s} length {length:5.2f}  reward {reward:8.2f}  violations {viol:4.2f}")
    print(draw(spec, trajs[0].steps))
