"""Direct-future-prediction agent: goal-weighted scoring, epsilon-greedy acting, loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines import select_nn, select_random, sorted_frontier
from .env import ExplorationState
from .features import BASE_CHANNELS, frame, shift_range, stack_history
from .neural import Network, Observation, predict
from .replay import observation, record_episode

DEFAULT_GOAL = (0.0, 0.0, 0.0, 0.25, 0.25, 0.5, 0.5, 1.0)


def q_values(predictions: np.ndarray, goal) -> np.ndarray:
    goal = np.asarray(goal, dtype=float)
    predictions = np.atleast_2d(predictions)
    if predictions.shape[1] != goal.size:
        raise ValueError(f"prediction width {predictions.shape[1]} does not match goal length {goal.size}")
    return predictions @ goal


@dataclass
class EpsilonSchedule:
    total_steps: int
    eps_max: float = 1.0
    eps_min: float = 0.15

    def __call__(self, step: int) -> float:
        return epsilon(self, step)


def epsilon(schedule: EpsilonSchedule, step: int) -> float:
    """Linear decay from ``eps_max`` at step 0 to ``eps_min`` at ``total_steps``."""
    if step < 0:
        raise ValueError("step must be non-negative")
    frac = min(step / schedule.total_steps, 1.0) if schedule.total_steps > 0 else 1.0
    return schedule.eps_max + frac * (schedule.eps_min - schedule.eps_max)


@dataclass
class TargetNormalizer:
    scale: np.ndarray

    def __post_init__(self):
        self.scale = np.asarray(self.scale, dtype=float)
        if np.any(self.scale <= 0):
            raise ValueError("normalizer scales must be positive")

    def normalize(self, y):
        return np.asarray(y) / self.scale

    def denormalize(self, y):
        return np.asarray(y) * self.scale

    @classmethod
    def identity(cls, dim: int = 8) -> "TargetNormalizer":
        return cls(np.ones(dim))


def fit_normalizer(targets) -> TargetNormalizer:
    """Per-component population standard deviation; zero-variance components get scale 1."""
    y = np.asarray(targets, dtype=float)
    if y.ndim != 2 or len(y) < 2:
        raise ValueError("need at least two target vectors")
    scale = y.std(axis=0)
    scale[scale <= 1e-12] = 1.0
    return TargetNormalizer(scale)


def loss(predictions: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared Euclidean error over the batch and its gradient w.r.t. the predictions."""
    predictions = np.asarray(predictions)
    targets = np.asarray(targets)
    if predictions.shape != targets.shape:
        raise ValueError(f"shape mismatch {predictions.shape} vs {targets.shape}")
    diff = predictions - targets
    b = len(diff)
    return float(np.sum(diff.astype(np.float64) ** 2) / b), (2.0 / b) * diff


def live_observation(state: ExplorationState, history: int = 2, with_nn_channel: bool = False,
                     shift: bool = True, dtype=np.float32) -> Observation:
    """Network input for a live state; equals the replayed observation at the same step."""
    if with_nn_channel and history > 1:
        # past NN picks need the past graphs; the replay path rebuilds them
        return observation(record_episode(state), state.t, history, True, shift, dtype)
    t = state.t
    t_dis = np.asarray(state.t_dis)
    t_vis = np.asarray(state.t_vis, dtype=float)
    width = BASE_CHANNELS + int(with_nn_channel)
    frames = []
    for s in range(t - history + 1, t + 1):
        if s < 0:
            frames.append(np.zeros((0, width), dtype))
            continue
        nn = state.local[select_nn(state)] if with_nn_channel and state.frontier else None
        frames.append(frame(int(np.searchsorted(t_dis, s, side="right")), s, t_dis, t_vis,
                            state.local[state.path[s]], nn, with_nn_channel, dtype))
    x = stack_history(frames)
    if shift:
        x = shift_range(x)
    return Observation(len(state.nodes), np.asarray(state.edges, dtype=np.int64).reshape(-1, 2), x,
                       float(state.t / state.total_length) if state.total_length else 0.0,
                       state.current_local, np.flatnonzero(t_vis <= t))


def greedy(state: ExplorationState, net: Network, goal, normalizer: TargetNormalizer | None = None,
           history: int = 2, with_nn_channel: bool = False, shift: bool = True) -> int:
    """Frontier node with the highest goal-weighted prediction (ties: lowest rank)."""
    options = sorted_frontier(state)
    if not options:
        raise ValueError("frontier is empty")
    if len(options) == 1:
        return options[0]
    obs = live_observation(state, history, with_nn_channel, shift, net.dtype)
    pred = predict(net, obs, [state.local[v] for v in options]).astype(np.float64)
    if normalizer is not None:
        pred = normalizer.denormalize(pred)
    return options[int(np.argmax(q_values(pred, goal)))]


def act(state: ExplorationState, net: Network, goal, eps: float, rng: np.random.Generator,
        normalizer: TargetNormalizer | None = None, history: int = 2, with_nn_channel: bool = False,
        shift: bool = True) -> int:
    if not state.frontier:
        raise ValueError("frontier is empty")
    if eps > 0 and (eps >= 1 or rng.random() < eps):
        return select_random(state, rng)
    return greedy(state, net, goal, normalizer, history, with_nn_channel, shift)


class DFPPolicy:
    """Callable policy ``(state, rng) -> node`` wrapping a network snapshot."""

    def __init__(self, net: Network, goal=DEFAULT_GOAL, eps: float = 0.0,
                 normalizer: TargetNormalizer | None = None, history: int = 2,
                 with_nn_channel: bool = False, shift: bool = True):
        self.net = net
        self.goal = np.asarray(goal, dtype=float)
        self.eps = eps
        self.normalizer = normalizer
        self.history = history
        self.with_nn_channel = with_nn_channel
        self.shift = shift

    def __call__(self, state: ExplorationState, rng: np.random.Generator) -> int:
        return act(state, self.net, self.goal, self.eps, rng, self.normalizer, self.history,
                   self.with_nn_channel, self.shift)
