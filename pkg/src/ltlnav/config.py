"""Run configuration loaded from YAML."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .ddpg import TrainConfig
from .errors import ConfigError
from .rewards import RewardParams


@dataclass
class RunConfig:
    scene: str
    formula: str
    eta: float = 1.0
    kappa: float | None = None
    radius: float = 0.25
    prefix_iterations: int = 2000
    suffix_iterations: int = 1000
    model: str = "point"
    dt: float = 0.05
    action_low: list[float] | None = None
    action_high: list[float] | None = None
    noise_scale: float = 0.0
    seed: int = 0
    n_workers: int = 1
    guarantee: bool = False
    outdir: str = "out"
    rewards: RewardParams = field(default_factory=RewardParams)
    training: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.eta <= 0:
            raise ConfigError(f"eta must be positive: {self.eta}")
        if self.radius > self.eta / 2 + 1e-12:
            raise ConfigError(
                f"ball radius {self.radius} exceeds eta/2 = {self.eta / 2}")
        if self.model not in ("point", "car", "quad"):
            raise ConfigError(f"unknown model kind {self.model!r}")
        if self.prefix_iterations <= 0 or self.suffix_iterations <= 0:
            raise ConfigError("iteration budgets must be positive")

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["rewards"] = self.rewards.to_dict()
        d["training"] = self.training.to_dict()
        return d

    @staticmethod
    def from_dict(d: dict) -> "RunConfig":
        d = dict(d)
        if "rewards" in d:
            d["rewards"] = RewardParams.from_dict(d["rewards"])
        if "training" in d:
            d["training"] = TrainConfig.from_dict(d["training"])
        try:
            return RunConfig(**d)
        except TypeError as exc:
            raise ConfigError(f"bad run config: {exc}") from exc

    @staticmethod
    def load(path) -> "RunConfig":
        with open(path) as fh:
            data = yaml.safe_load(fh)
        if not isinstance(data, dict):
            raise ConfigError(f"expected a mapping in {path}")
        cfg = RunConfig.from_dict(data)
        # resolve the scene path relative to the config file
        scene = Path(cfg.scene)
        if not scene.is_absolute():
            cfg.scene = str((Path(path).parent / scene).resolve())
        return cfg

    def save(self, path) -> None:
        with open(path, "w") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=True)
