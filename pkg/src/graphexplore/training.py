"""Training loop for the learned explorer.

Collection and optimisation interleave at a fixed ratio: every
``env_steps_per_train_step`` environment steps trigger one gradient step on
a minibatch replayed from the buffer. Finished episodes enter the buffer
whole. Before the first gradient step a few purely random episodes fit the
target normaliser and seed the buffer.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import env
from .agent import DFPPolicy, EpsilonSchedule, TargetNormalizer, fit_normalizer, loss
from .baselines import run_policy
from .config import TrainConfig, dump_config
from .evaluation import EvalReport, curve_csv, evaluate, write_report_json
from .generators import FAMILIES, FAMILY_SIZES, Dataset, generate_family, load_dataset, make_dataset
from .neural import Adam, Network, backward, forward, init_network, make_batch, preset, save_checkpoint
from .replay import DEFAULT_OFFSETS, ReplayBuffer, make_target, record_episode, sample_minibatch

log = logging.getLogger(__name__)


def resolve_dataset(cfg: TrainConfig) -> Dataset:
    if cfg.dataset in FAMILIES:
        graphs = generate_family(cfg.dataset, FAMILY_SIZES[cfg.dataset], seed=cfg.data_seed)
        return make_dataset(graphs, cfg.test_set_ratio, cfg.evaluation_episodes, cfg.data_seed, cfg.dataset)
    return load_dataset(cfg.dataset)


def train_step(net: Network, adam: Adam, batch) -> float:
    """One Adam step on the rows of the actions actually taken."""
    obs = [b.obs for b in batch]
    pred, trace = forward(net, make_batch(obs, [[b.action] for b in batch], net.dtype))
    value, grad = loss(pred, np.stack([b.target for b in batch]))
    adam.step(net, backward(net, trace, grad))
    return value


@dataclass
class TrainResult:
    net: Network
    normalizer: TargetNormalizer
    curve: list[tuple[int, float, float]] = field(default_factory=list)
    reports: list[EvalReport] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)

    @property
    def final(self) -> EvalReport | None:
        return self.reports[-1] if self.reports else None


def agent_settings(cfg: TrainConfig, normalizer: TargetNormalizer) -> dict:
    return {"goal": list(cfg.temporal_coefficients), "normalizer": normalizer.scale.tolist(),
            "history": cfg.node_history, "nn_feature": cfg.nn_feature, "shift": cfg.shift_features}


def train(cfg: TrainConfig, out_dir=None, dataset: Dataset | None = None,
          on_eval: Callable[[EvalReport], None] | None = None) -> TrainResult:
    ds = dataset if dataset is not None else resolve_dataset(cfg)
    if not ds.train:
        raise ValueError("training set is empty")
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.txt").write_text(dump_config(cfg))

    rng = np.random.default_rng(cfg.seed)
    in_dim = (3 + int(cfg.nn_feature)) * cfg.node_history
    net = init_network(preset(cfg.preset, in_dim), seed=int(rng.integers(2**31)), preset_name=cfg.preset)
    adam = Adam(net, lr=cfg.learning_rate)
    buffer = ReplayBuffer(cfg.replay_buffer_size)

    def sample_start():
        g = ds.train[int(rng.integers(len(ds.train)))]
        return g, int(rng.integers(g.num_nodes))

    targets = []
    for _ in range(cfg.normalizer_episodes):
        state, _ = run_policy(*sample_start(), "random", cfg.max_episode_steps, rng)
        rec = record_episode(state)
        buffer.store(rec)
        targets += [make_target(rec, t, DEFAULT_OFFSETS) for t in range(rec.T)]
    normalizer = (fit_normalizer(targets) if cfg.target_normalization and len(targets) >= 2
                  else TargetNormalizer.identity())

    schedule = EpsilonSchedule(cfg.training_steps, cfg.eps_max, cfg.eps_min)
    policy = DFPPolicy(net, cfg.temporal_coefficients, schedule(0), normalizer, cfg.node_history,
                       cfg.nn_feature, cfg.shift_features)
    greedy = DFPPolicy(net, cfg.temporal_coefficients, 0.0, normalizer, cfg.node_history,
                       cfg.nn_feature, cfg.shift_features)
    result = TrainResult(net, normalizer)
    settings = agent_settings(cfg, normalizer)

    state = env.reset(*sample_start(), step_cap=cfg.max_episode_steps)
    for grad_step in range(1, cfg.training_steps + 1):
        policy.eps = schedule(grad_step - 1)
        for _ in range(cfg.env_steps_per_train_step):
            if state.done:
                buffer.store(record_episode(state))
                state = env.reset(*sample_start(), step_cap=cfg.max_episode_steps)
            env.step(state, policy(state, rng))
        batch = sample_minibatch(buffer, cfg.minibatch_size, rng, normalizer, cfg.node_history,
                                 cfg.nn_feature, cfg.shift_features)
        result.losses.append(train_step(net, adam, batch))

        if grad_step % cfg.train_steps_per_evaluation == 0:
            rep = evaluate(greedy, ds, cfg.max_episode_steps, cfg.seed, "noge-nn" if cfg.nn_feature else "noge",
                           step=grad_step)
            result.reports.append(rep)
            result.curve.append((grad_step, rep.mean, rep.std))
            log.info("step %d  loss %.5f  eps %.3f  rate %.4f", grad_step,
                     float(np.mean(result.losses[-cfg.train_steps_per_evaluation:])), policy.eps, rep.mean)
            if out is not None:
                save_checkpoint(out / "checkpoint.npz", net, settings)
                (out / "curve.csv").write_text(curve_csv(result.curve))
            if on_eval is not None:
                on_eval(rep)

    if out is not None:
        save_checkpoint(out / "checkpoint.npz", net, settings)
        (out / "curve.csv").write_text(curve_csv(result.curve))
        if result.final is not None:
            write_report_json(out / "report.json", result.final)
    return result
