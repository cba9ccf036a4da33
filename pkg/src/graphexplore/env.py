"""Online graph exploration environment.

The agent sits on a node of an unknown world graph and only knows the
neighbourhoods of the nodes it has visited. Each step it picks a frontier
node, walks there along a shortest path of the *known* graph and pays the
hop count.

Observed nodes get a local index in the order they were discovered, and
known edges are kept in the order they were revealed. Both orders are what
the replay buffer relies on to rebuild intermediate steps from prefixes.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Sequence

from .graph import INF, Graph, shortest_path


class InvalidActionError(ValueError):
    pass


@dataclass
class StepOutcome:
    reward: int
    revealed_nodes: list[int]
    revealed_edges: list[tuple[int, int]]
    done: bool


@dataclass
class ExplorationState:
    world: Graph
    step_cap: int | None = None
    priority: Sequence[int] | None = None

    nodes: list[int] = field(default_factory=list)  # world ids, discovery order
    local: dict[int, int] = field(default_factory=dict)
    known_adj: list[list[int]] = field(default_factory=list)  # local ids
    edges: list[tuple[int, int]] = field(default_factory=list)  # local ids, revelation order
    t_dis: list[int] = field(default_factory=list)
    t_vis: list[float] = field(default_factory=list)

    path: list[int] = field(default_factory=list)
    lengths: list[int] = field(default_factory=list)  # per-step hop cost
    visited: set[int] = field(default_factory=set)
    frontier: set[int] = field(default_factory=set)
    total_length: int = 0
    t: int = 0

    @property
    def current(self) -> int:
        return self.path[-1]

    @property
    def current_local(self) -> int:
        return self.local[self.path[-1]]

    @property
    def num_known_nodes(self) -> int:
        return len(self.nodes)

    @property
    def done(self) -> bool:
        return not self.frontier or (self.step_cap is not None and self.t >= self.step_cap)

    def rank(self, v: int):
        """Tie-breaking key of world node ``v`` (its id unless a priority is given)."""
        return v if self.priority is None else self.priority[v]

    def known_graph(self) -> Graph:
        """The observed subgraph over local (discovery-order) ids."""
        return Graph.from_edges(len(self.nodes), self.edges)

    def copy(self) -> "ExplorationState":
        world, priority = self.world, self.priority
        self.world = self.priority = None
        try:
            dup = copy.deepcopy(self)
        finally:
            self.world, self.priority = world, priority
        dup.world, dup.priority = world, priority
        return dup

    def _discover(self, v: int, t: int) -> int:
        i = len(self.nodes)
        self.nodes.append(v)
        self.local[v] = i
        self.known_adj.append([])
        self.t_dis.append(t)
        self.t_vis.append(INF)
        return i

    def _add_edge(self, a: int, b: int) -> None:
        self.edges.append((a, b))
        self.known_adj[a].append(b)
        self.known_adj[b].append(a)

    def _reveal(self, v: int) -> tuple[list[int], list[tuple[int, int]]]:
        """Merge the world neighbourhood of ``v`` (just visited) into memory."""
        iv = self.local[v]
        new_nodes, new_edges = [], []
        for w in sorted(self.world.adjacency[v], key=self.rank):
            if w in self.visited:
                continue  # edge already revealed when w was visited
            if w not in self.local:
                self._discover(w, self.t)
                self.frontier.add(w)
                new_nodes.append(w)
            self._add_edge(iv, self.local[w])
            new_edges.append((v, w))
        return new_nodes, new_edges


def reset(world: Graph, source: int, step_cap: int | None = None,
          priority: Sequence[int] | None = None) -> ExplorationState:
    """Start an episode at ``source`` with its neighbourhood revealed.

    ``priority`` optionally replaces node ids as the tie-breaking key used for
    revelation order and by the selection policies.
    """
    if not 0 <= source < world.num_nodes:
        raise ValueError(f"source {source} is not a node of the graph")
    if world.num_nodes > 1 and not world.adjacency[source]:
        raise ValueError(f"source {source} is isolated; the world graph must be connected")
    state = ExplorationState(world=world, step_cap=step_cap, priority=priority)
    state._discover(source, 0)
    state.t_vis[0] = 0
    state.visited.add(source)
    state.path.append(source)
    state._reveal(source)
    return state


def step(state: ExplorationState, target: int) -> tuple[ExplorationState, StepOutcome]:
    """Walk to frontier node ``target``. Mutates and returns ``state``."""
    if target in state.visited:
        raise InvalidActionError(f"node {target} was already visited")
    if target not in state.frontier:
        raise InvalidActionError(f"node {target} is not in the frontier")
    if state.step_cap is not None and state.t >= state.step_cap:
        raise InvalidActionError("step cap reached")

    hops = len(shortest_path(state.known_adj, state.current_local, state.local[target])) - 1
    state.t += 1
    state.visited.add(target)
    state.frontier.discard(target)
    state.path.append(target)
    state.lengths.append(hops)
    state.total_length += hops
    state.t_vis[state.local[target]] = state.t
    new_nodes, new_edges = state._reveal(target)
    return state, StepOutcome(-hops, new_nodes, new_edges, state.done)


def exploration_rate(state: ExplorationState) -> float:
    """Visited nodes (source excluded) per hop travelled; 0 before the first move."""
    if state.total_length == 0:
        return 0.0
    return state.t / state.total_length
