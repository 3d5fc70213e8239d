"""
Preference accumulation with MDFT
=================================

Three lunch options scored on taste and health. We look at the single-step
valences, then at how the choice distribution moves as attention shifts
from one attribute to the other.
"""

import numpy as np

from sofai.mdft import (
    FixedHorizon,
    MdftModel,
    Threshold,
    choice_distribution,
    contrast_matrix,
    deliberate,
    valence,
)

# rows: salad, burrito, pasta; columns: taste, health
M = np.array([[1.0, 5.0], [5.0, 1.0], [2.0, 3.0]])
names = ["salad", "burrito", "pasta"]

model = MdftModel(M, [0.55, 0.45])
print("contrast matrix\n", contrast_matrix(3))
print("feedback matrix\n", np.round(model.S, 4))

# Attending to taste alone favours the burrito; health favours the salad.
print("valence | taste :", valence(model, [1, 0]))
print("valence | health:", valence(model, [0, 1]))

# %%
# Sweep the attention probability on taste and estimate the choice shares.
rng = np.random.default_rng(0)
print("\nP(taste)  " + "  ".join(f"{n:>8s}" for n in names))
for p in np.linspace(0.0, 1.0, 6):
    m = MdftModel(M, [p, 1 - p], FixedHorizon(30))
    shares = choice_distribution(m, 20_000, rng)
    print(f"  {p:4.2f}   " + "  ".join(f"{s:8.3f}" for s in shares))

# %%
# A threshold stopping rule ends deliberation once any preference reaches
# theta; higher thresholds take longer.
for theta in (4.0, 8.0, 16.0):
    m = MdftModel(M, [0.55, 0.45], Threshold(theta=theta, max_iterations=2000))
    runs = [deliberate(m, rng) for _ in range(2000)]
    its = np.array([r.iterations for r in runs])
    picks = np.bincount([r.choice for r in runs], minlength=3) / len(runs)
    print(f"theta={theta:4.1f}  mean iterations {its.mean():6.1f}  shares {np.round(picks, 3)}")
