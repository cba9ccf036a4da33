"""Compressed episode storage and reconstruction of intermediate steps.

An episode is kept as its final known graph (nodes in discovery order, edges
in revelation order), the discovery/visit step of every node and the path.
The graph at step ``t`` is a prefix of both orders, and the frontier is
``{v : t_dis(v) <= t < t_vis(v)}``.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass

import numpy as np

from .env import ExplorationState
from .features import frame, shift_range, stack_history
from .graph import INF, Graph, nearest_of_set
from .neural import Observation

DEFAULT_OFFSETS = (1, 2, 4, 8, 16, 32, 64, 128)


@dataclass
class EpisodeRecord:
    nodes: np.ndarray  # world ids, discovery order
    ranks: np.ndarray  # tie-breaking key per local node
    edges: np.ndarray  # (E, 2) local ids, revelation order
    t_dis: np.ndarray
    t_vis: np.ndarray  # float, inf if never visited
    path: np.ndarray  # local ids, length T + 1
    node_counts: np.ndarray  # |V_t| for t = 0..T
    edge_counts: np.ndarray  # |E_t| for t = 0..T
    measurements: np.ndarray  # u_t for t = 0..T

    @property
    def T(self) -> int:
        return len(self.path) - 1

    @property
    def actions(self) -> np.ndarray:
        return self.path[1:]

    @property
    def final_graph(self) -> Graph:
        return Graph.from_edges(len(self.nodes), self.edges)

    def validate(self) -> None:
        T = self.T
        checks = [
            (len(self.node_counts) == T + 1 and len(self.edge_counts) == T + 1, "count arrays need T+1 entries"),
            (len(self.measurements) == T + 1, "measurements need T+1 entries"),
            (np.all(np.diff(self.node_counts) >= 0) and np.all(np.diff(self.edge_counts) >= 0),
             "counts must be nondecreasing"),
            (np.all((self.measurements >= 0) & (self.measurements <= 1)), "measurements must lie in [0, 1]"),
            (np.all(self.t_dis <= self.t_vis), "t_dis must not exceed t_vis"),
            (len(self.t_dis) == len(self.nodes) == len(self.t_vis), "per-node arrays disagree"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(f"malformed episode record: {msg}")


def record_episode(state: ExplorationState) -> EpisodeRecord:
    """Compress a finished (or capped) live episode."""
    T = state.t
    t_dis = np.array(state.t_dis, dtype=np.int64)
    t_vis = np.array(state.t_vis, dtype=float)
    edges = np.array(state.edges, dtype=np.int64).reshape(-1, 2)
    steps = np.arange(T + 1)
    # an edge is revealed when its first endpoint is visited
    revealed = np.minimum(t_vis[edges[:, 0]], t_vis[edges[:, 1]]) if len(edges) else np.zeros(0)
    lengths = np.concatenate([[0], np.cumsum(state.lengths)])
    meas = np.divide(steps, lengths, out=np.zeros(T + 1), where=lengths > 0)
    rec = EpisodeRecord(
        nodes=np.array(state.nodes, dtype=np.int64),
        ranks=np.array([state.rank(v) for v in state.nodes]),
        edges=edges,
        t_dis=t_dis,
        t_vis=t_vis,
        path=np.array([state.local[v] for v in state.path], dtype=np.int64),
        node_counts=np.searchsorted(t_dis, steps, side="right"),
        edge_counts=np.searchsorted(revealed, steps, side="right"),
        measurements=meas,
    )
    rec.validate()
    return rec


@dataclass
class Snapshot:
    graph: Graph  # local ids
    nodes: np.ndarray  # world ids of the local nodes
    frontier: set[int]  # local ids
    visited: set[int]
    current: int
    measurement: float


def _check_step(record: EpisodeRecord, t: int, allow_final: bool = False) -> None:
    hi = record.T if allow_final else record.T - 1
    if not 0 <= t <= hi:
        raise IndexError(f"step {t} out of range for an episode of length {record.T}")


def reconstruct(record: EpisodeRecord, t: int) -> Snapshot:
    """State of the episode at step ``t`` (``0 <= t < T``)."""
    _check_step(record, t)
    return _snapshot(record, t)


def _snapshot(record: EpisodeRecord, t: int) -> Snapshot:
    n, e = int(record.node_counts[t]), int(record.edge_counts[t])
    t_dis, t_vis = record.t_dis[:n], record.t_vis[:n]
    return Snapshot(
        graph=Graph.from_edges(n, record.edges[:e]),
        nodes=record.nodes[:n],
        frontier=set(np.flatnonzero((t >= t_dis) & (t < t_vis)).tolist()),
        visited=set(np.flatnonzero(t_vis <= t).tolist()),
        current=int(record.path[t]),
        measurement=float(record.measurements[t]),
    )


def nn_choice(record: EpisodeRecord, t: int) -> int | None:
    n, e = int(record.node_counts[t]), int(record.edge_counts[t])
    frontier = np.flatnonzero((t >= record.t_dis[:n]) & (t < record.t_vis[:n]))
    if frontier.size == 0:
        return None
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in record.edges[:e]:
        adj[a].append(b)
        adj[b].append(a)
    i, _ = nearest_of_set(adj, int(record.path[t]), frontier.tolist(), key=record.ranks.__getitem__)
    return i


def record_frame(record: EpisodeRecord, t: int, with_nn_channel: bool = False, dtype=np.float32) -> np.ndarray:
    n = int(record.node_counts[t])
    choice = nn_choice(record, t) if with_nn_channel else None
    return frame(n, t, record.t_dis, record.t_vis, int(record.path[t]), choice, with_nn_channel, dtype)


def observation(record: EpisodeRecord, t: int, history: int = 2, with_nn_channel: bool = False,
                shift: bool = True, dtype=np.float32) -> Observation:
    """Network input at step ``t``, identical to what the live agent saw."""
    _check_step(record, t, allow_final=True)
    width = 3 + int(with_nn_channel)
    frames = [record_frame(record, s, with_nn_channel, dtype) if s >= 0 else np.zeros((0, width), dtype)
              for s in range(t - history + 1, t + 1)]
    x = stack_history(frames)
    if shift:
        x = shift_range(x)
    n, e = int(record.node_counts[t]), int(record.edge_counts[t])
    return Observation(n, record.edges[:e], x, float(record.measurements[t]), int(record.path[t]),
                       np.flatnonzero(record.t_vis[:n] <= t))


def make_target(record: EpisodeRecord, t: int, offsets=DEFAULT_OFFSETS) -> np.ndarray:
    """Future measurement differences; horizons past the episode end use ``m_T``."""
    _check_step(record, t)
    idx = np.minimum(t + np.asarray(offsets), record.T)
    return record.measurements[idx] - record.measurements[t]


@dataclass
class TrainingTuple:
    obs: Observation
    action: int  # local id of the node visited next
    target: np.ndarray


class ReplayBuffer:
    """FIFO of whole episodes holding at most ``capacity`` transitions.

    The newest episode is always kept, even if it alone exceeds the capacity.
    """

    def __init__(self, capacity: int = 20000):
        self.capacity = capacity
        self.episodes: deque[EpisodeRecord] = deque()
        self.transitions = 0
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return self.transitions

    def store(self, record: EpisodeRecord) -> None:
        record.validate()
        if record.T == 0:
            return  # nothing to learn from
        with self._lock:
            self.episodes.append(record)
            self.transitions += record.T
            while self.transitions > self.capacity and len(self.episodes) > 1:
                self.transitions -= self.episodes.popleft().T

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[tuple[EpisodeRecord, int]]:
        """Uniform draw (with replacement) of ``(episode, t)`` transitions."""
        with self._lock:
            episodes = list(self.episodes)
        if not episodes:
            raise ValueError("cannot sample from an empty replay buffer")
        bounds = np.cumsum([r.T for r in episodes])
        picks = rng.integers(bounds[-1], size=batch_size)
        out = []
        for p in picks:
            i = int(np.searchsorted(bounds, p, side="right"))
            out.append((episodes[i], int(p - (bounds[i - 1] if i else 0))))
        return out


def sample_minibatch(buffer: ReplayBuffer, batch_size: int, rng: np.random.Generator, normalizer=None,
                     history: int = 2, with_nn_channel: bool = False, shift: bool = True,
                     offsets=DEFAULT_OFFSETS, dtype=np.float32) -> list[TrainingTuple]:
    batch = []
    for record, t in buffer.sample(batch_size, rng):
        y = make_target(record, t, offsets)
        if normalizer is not None:
            y = normalizer.normalize(y)
        batch.append(TrainingTuple(observation(record, t, history, with_nn_channel, shift, dtype),
                                   int(record.path[t + 1]), y.astype(dtype)))
    return batch
