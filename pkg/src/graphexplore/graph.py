"""Undirected, unweighted simple graphs and hop-distance queries."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

INF = float("inf")


class NoPathError(ValueError):
    """Raised when a target cannot be reached from the source."""


@dataclass(frozen=True)
class Graph:
    """Immutable adjacency-list graph over dense node ids ``0..num_nodes-1``.

    Adjacency lists are sorted tuples. Use :meth:`from_edges` to build one;
    it drops self-loops and collapses parallel edges.
    """

    num_nodes: int
    adjacency: tuple[tuple[int, ...], ...]

    @classmethod
    def from_edges(cls, num_nodes: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        nbrs: list[set[int]] = [set() for _ in range(num_nodes)]
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < num_nodes and 0 <= v < num_nodes):
                raise ValueError(f"edge ({u}, {v}) out of range for {num_nodes} nodes")
            if u == v:
                continue
            nbrs[u].add(v)
            nbrs[v].add(u)
        return cls(num_nodes, tuple(tuple(sorted(s)) for s in nbrs))

    @property
    def num_edges(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def edges(self) -> list[tuple[int, int]]:
        """Edges as ``(u, v)`` pairs with ``u < v``, in lexicographic order."""
        return [(u, v) for u, nb in enumerate(self.adjacency) for v in nb if u < v]

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """Return the graph with node ``v`` renamed to ``perm[v]``."""
        return Graph.from_edges(self.num_nodes, ((perm[u], perm[v]) for u, v in self.edges()))

    def subgraph(self, nodes: Sequence[int]) -> tuple["Graph", list[int]]:
        """Induced subgraph, relabelled densely in the order of ``nodes``.

        Returns the subgraph and the list mapping new ids back to old ones.
        """
        index = {v: i for i, v in enumerate(nodes)}
        edges = [(index[u], index[v]) for u, v in self.edges() if u in index and v in index]
        return Graph.from_edges(len(nodes), edges), list(nodes)


def _neighbors_fn(graph) -> Callable[[int], Sequence[int]]:
    # Accept a Graph or a plain list-of-lists adjacency (the environment's known graph).
    if isinstance(graph, Graph):
        return graph.adjacency.__getitem__
    return graph.__getitem__


def _num_nodes(graph) -> int:
    return graph.num_nodes if isinstance(graph, Graph) else len(graph)


def distances_from(graph, src: int) -> np.ndarray:
    """Hop distances from ``src``; unreachable nodes get ``inf``."""
    nbrs = _neighbors_fn(graph)
    dist = np.full(_num_nodes(graph), INF)
    dist[src] = 0
    queue = deque([src])
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for w in nbrs(u):
            if dist[w] == INF:
                dist[w] = du
                queue.append(w)
    return dist


def shortest_path(graph, src: int, dst: int) -> list[int]:
    """A minimum-hop path from ``src`` to ``dst``, both endpoints included."""
    if src == dst:
        return [src]
    nbrs = _neighbors_fn(graph)
    parent = {src: src}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for w in nbrs(u):
            if w in parent:
                continue
            parent[w] = u
            if w == dst:
                path = [w]
                while path[-1] != src:
                    path.append(parent[path[-1]])
                return path[::-1]
            queue.append(w)
    raise NoPathError(f"no path from {src} to {dst}")


def nearest_of_set(graph, src: int, targets, key: Callable[[int], object] | None = None) -> tuple[int, int]:
    """Closest member of ``targets`` to ``src`` and its hop distance.

    The sweep stops after the first BFS layer that contains a target. Ties
    go to the smallest ``key(node)`` (the node id itself by default).
    """
    targets = set(targets)
    if not targets:
        raise ValueError("empty target set")
    if src in targets:
        return src, 0
    key = key or (lambda v: v)
    nbrs = _neighbors_fn(graph)
    seen = {src}
    layer = [src]
    depth = 0
    while layer:
        depth += 1
        nxt = []
        for u in layer:
            for w in nbrs(u):
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        hits = [w for w in nxt if w in targets]
        if hits:
            return min(hits, key=key), depth
        layer = nxt
    raise NoPathError(f"no target reachable from {src}")


def is_connected(graph: Graph) -> bool:
    if graph.num_nodes == 0:
        return False
    return bool(np.all(np.isfinite(distances_from(graph, 0))))


def largest_component(graph: Graph) -> list[int]:
    """Sorted node ids of the largest connected component (smallest-id component on ties)."""
    label = np.full(graph.num_nodes, -1)
    best: list[int] = []
    for s in range(graph.num_nodes):
        if label[s] >= 0:
            continue
        comp = [s]
        label[s] = s
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for w in graph.adjacency[u]:
                if label[w] < 0:
                    label[w] = s
                    comp.append(w)
                    queue.append(w)
        if len(comp) > len(best):
            best = comp
    return sorted(best)
