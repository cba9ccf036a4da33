"""Training configuration stored as flat ``key = value`` text."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path

from .agent import DEFAULT_GOAL


class ConfigError(ValueError):
    pass


@dataclass
class TrainConfig:
    # reference hyperparameters
    test_set_ratio: float = 0.2
    max_episode_steps: int = 500
    node_history: int = 2
    feature_range: tuple[float, float] = (-0.5, 0.5)
    target_normalization: bool = True
    training_steps: int = 25600
    evaluation_episodes: int = 50
    env_steps_per_train_step: int = 32
    train_steps_per_evaluation: int = 512
    replay_buffer_size: int = 20000
    eps_max: float = 1.0
    eps_min: float = 0.15
    temporal_coefficients: tuple[float, ...] = DEFAULT_GOAL
    minibatch_size: int = 32
    learning_rate: float = 1e-4
    # run setup
    seed: int = 0
    dataset: str = "grid"  # family name (generated in memory) or a dataset directory
    data_seed: int = 0
    preset: str = "generated"
    nn_feature: bool = False
    normalizer_episodes: int = 10

    def __post_init__(self):
        self.validate()

    @property
    def shift_features(self) -> bool:
        return tuple(self.feature_range) == (-0.5, 0.5)

    def validate(self) -> None:
        positive = ["max_episode_steps", "node_history", "training_steps", "evaluation_episodes",
                    "env_steps_per_train_step", "train_steps_per_evaluation", "replay_buffer_size",
                    "minibatch_size", "normalizer_episodes"]
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if not 0 < self.test_set_ratio < 1:
            raise ConfigError("test_set_ratio must lie in (0, 1)")
        if not 0 <= self.eps_min <= self.eps_max <= 1:
            raise ConfigError("need 0 <= eps_min <= eps_max <= 1")
        if len(self.temporal_coefficients) != 8:
            raise ConfigError("temporal_coefficients needs 8 entries")
        if tuple(self.feature_range) not in ((-0.5, 0.5), (0.0, 1.0)):
            raise ConfigError("feature_range must be [-0.5, 0.5] or [0, 1]")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.preset not in ("generated", "road"):
            raise ConfigError("preset must be 'generated' or 'road'")

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)


def _parse_value(f: dataclasses.Field, raw: str):
    raw = raw.strip()
    kind = type(f.default)
    if kind is bool:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{f.name}: expected a boolean, got {raw!r}")
    if kind is tuple:
        return tuple(float(x) for x in raw.strip("[]()").replace(",", " ").split())
    return kind(raw)


def parse_overrides(pairs, base: TrainConfig | None = None) -> TrainConfig:
    """Apply ``key=value`` strings (or ``(key, value)`` pairs) to ``base``."""
    known = {f.name: f for f in fields(TrainConfig)}
    changes = {}
    for item in pairs:
        key, value = item.split("=", 1) if isinstance(item, str) else item
        key = key.strip()
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            changes[key] = _parse_value(known[key], value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
    return (base or TrainConfig()).replace(**changes)


def load_config(path, overrides=()) -> TrainConfig:
    pairs = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        pairs.append(tuple(line.split("=", 1)))
    return parse_overrides(list(pairs) + list(overrides))


def _format_value(value) -> str:
    if isinstance(value, tuple):
        return "[" + ", ".join(repr(float(v)) for v in value) + "]"
    return str(value).lower() if isinstance(value, bool) else str(value)


def dump_config(cfg: TrainConfig) -> str:
    return "".join(f"{f.name} = {_format_value(getattr(cfg, f.name))}\n" for f in fields(cfg))
