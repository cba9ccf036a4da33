"""Node features and the scalar measurement fed to the predictor network.

A frame has one row per known node (local discovery order) and the channels
``[visited, frontier, current]`` plus an optional one-hot channel marking the
node the nearest-neighbour heuristic would pick.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import env
from .baselines import select_nn
from .env import ExplorationState

BASE_CHANNELS = 3


def frame(num_nodes: int, t: int, t_dis, t_vis, current: int, nn_choice: int | None = None,
          with_nn_channel: bool = False, dtype=np.float32) -> np.ndarray:
    """Single frame from discovery/visit times, as reconstructed at step ``t``."""
    t_dis = np.asarray(t_dis[:num_nodes], dtype=float)
    t_vis = np.asarray(t_vis[:num_nodes], dtype=float)
    x = np.zeros((num_nodes, BASE_CHANNELS + int(with_nn_channel)), dtype=dtype)
    x[:, 0] = t_vis <= t
    x[:, 1] = (t_dis <= t) & (t < t_vis)
    x[current, 2] = 1
    if with_nn_channel and nn_choice is not None:
        x[nn_choice, 3] = 1
    return x


def base_features(state: ExplorationState, with_nn_channel: bool = False, dtype=np.float32) -> np.ndarray:
    nn_choice = None
    if with_nn_channel and state.frontier:
        nn_choice = state.local[select_nn(state)]
    return frame(state.num_known_nodes, state.t, state.t_dis, state.t_vis, state.current_local,
                 nn_choice, with_nn_channel, dtype)


def stack_history(frames: Sequence[np.ndarray]) -> np.ndarray:
    """Concatenate frames channel-wise, oldest first.

    Frames may only grow (new nodes are appended); older frames are
    zero-padded for nodes they do not yet contain.
    """
    if not frames:
        raise ValueError("need at least one frame")
    n = frames[-1].shape[0]
    width = frames[-1].shape[1]
    out = np.zeros((n, width * len(frames)), dtype=frames[-1].dtype)
    prev_rows = 0
    for k, f in enumerate(frames):
        if f.shape[1] != width:
            raise ValueError("frames have different channel counts")
        if f.shape[0] > n or f.shape[0] < prev_rows:
            raise ValueError("frame node counts must be nondecreasing and not exceed the newest frame")
        prev_rows = f.shape[0]
        out[: f.shape[0], k * width:(k + 1) * width] = f
    return out


def shift_range(features: np.ndarray) -> np.ndarray:
    """Map ``{0, 1}`` features to ``{-0.5, 0.5}``."""
    if features.size and (features.min() < 0 or features.max() > 1):
        raise ValueError("features must lie in [0, 1] before shifting")
    return features - features.dtype.type(0.5)


def measurement(state: ExplorationState) -> float:
    return env.exploration_rate(state)


def decode_frame(x: np.ndarray) -> tuple[set[int], set[int], int]:
    """Inverse of :func:`frame` on the first three channels: ``(visited, frontier, current)``."""
    visited = set(np.flatnonzero(x[:, 0] > 0).tolist())
    frontier = set(np.flatnonzero(x[:, 1] > 0).tolist())
    (current,) = np.flatnonzero(x[:, 2] > 0).tolist()
    return visited, frontier, current

