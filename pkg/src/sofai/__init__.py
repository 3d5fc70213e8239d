"""Fast/slow decision making with metacognitive arbitration on constrained grids."""
from .agents import AGENTS, MdftParams, QPair, run_agent, run_sofai_trajectory, run_trajectory
from .config import ExperimentConfig, load_config
from .experience import ExperienceStore
from .grid import Action, GridParams, GridSpec, legal_actions, random_grid, reward_of, step
from .harness import analyze, js_divergence, moving_average, run_experiment, usage_series
from .mdft import MdftModel, choice_distribution, contrast_matrix, deliberate, feedback_matrix, valence
from .metacog import McConfig, McDecision, mc_decide
from .records import Step, TrajectoryRecord
from .rl import QTable, RlHyperparams, greedy_rollout, train
from .solvers import AttentionMode, attention_weights, build_s2_model, s1_propose, s2_propose

__version__ = "0.1.0"
