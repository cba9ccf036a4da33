"""Online graph exploration with classical heuristics and a learned explorer."""

from .baselines import run_policy, select_bfs, select_dfs, select_nn, select_random
from .env import ExplorationState, StepOutcome, exploration_rate, reset, step
from .graph import Graph, NoPathError, distances_from, nearest_of_set, shortest_path

__version__ = "0.1.0"
