"""Classical frontier-selection policies: RANDOM, BFS, DFS and NN."""

from __future__ import annotations

from enum import Enum
from typing import Callable

import numpy as np

from . import env
from .env import ExplorationState
from .graph import Graph, nearest_of_set

Policy = Callable[[ExplorationState, np.random.Generator], int]


class PolicyKind(str, Enum):
    RANDOM = "random"
    BFS = "bfs"
    DFS = "dfs"
    NN = "nn"


def _require_frontier(state: ExplorationState) -> None:
    if not state.frontier:
        raise ValueError("frontier is empty")


def sorted_frontier(state: ExplorationState) -> list[int]:
    return sorted(state.frontier, key=state.rank)


def select_random(state: ExplorationState, rng: np.random.Generator) -> int:
    _require_frontier(state)
    options = sorted_frontier(state)
    return options[int(rng.integers(len(options)))]


# Nodes revealed in the same step are discovered in rank order, so the local
# (discovery) index orders the frontier by (t_dis, rank).
def select_bfs(state: ExplorationState, rng=None) -> int:
    _require_frontier(state)
    return min(state.frontier, key=state.local.__getitem__)


def select_dfs(state: ExplorationState, rng=None) -> int:
    _require_frontier(state)
    return max(state.frontier, key=state.local.__getitem__)


def select_nn(state: ExplorationState, rng=None) -> int:
    _require_frontier(state)
    targets = {state.local[v] for v in state.frontier}
    i, _ = nearest_of_set(state.known_adj, state.current_local, targets,
                          key=lambda i: state.rank(state.nodes[i]))
    return state.nodes[i]


POLICIES: dict[str, Policy] = {
    PolicyKind.RANDOM.value: select_random,
    PolicyKind.BFS.value: select_bfs,
    PolicyKind.DFS.value: select_dfs,
    PolicyKind.NN.value: select_nn,
}


def get_policy(name: str) -> Policy:
    try:
        return POLICIES[PolicyKind(name.lower()).value]
    except ValueError:
        raise ValueError(f"unknown policy {name!r}; expected one of {sorted(POLICIES)}") from None


def run_policy(world: Graph, source: int, policy: Policy | str, step_cap: int | None = None,
               rng: np.random.Generator | None = None, priority=None) -> tuple[ExplorationState, list[int]]:
    """Explore ``world`` from ``source`` until the frontier empties or the cap is hit."""
    if isinstance(policy, str):
        policy = get_policy(policy)
    rng = rng if rng is not None else np.random.default_rng(0)
    state = env.reset(world, source, step_cap=step_cap, priority=priority)
    rewards = []
    while not state.done:
        _, outcome = env.step(state, policy(state, rng))
        rewards.append(outcome.reward)
    return state, rewards
