"""Run configuration: defaults, JSON file loading, typo-safe merging."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .accel.config import AccelConfig
from .dataset import NoiseConfig, SplitConfig
from .fixedpoint import FixedPointFormat
from .model import TrainConfig
from .network import NetworkSpec, build_network


class ConfigError(ValueError):
    """Unusable run configuration (unknown key, bad value, bad JSON)."""


DEFAULTS = {
    "network": {
        "channel_profile": [16, 8, 8, 8, 8, 16, 1],
        "input_hw": 28,
        "canvas_hw": 32,
        "strict_pool": False,
    },
    "noise": {"sigma": 0.3, "clip_lo": 0.0, "clip_hi": 1.0, "seed": 0},
    "split": {"train_fraction": 0.8, "seed": 0},
    "train": {
        "epochs": 20,
        "batch_size": 32,
        "learning_rate": 0.5,
        "optimizer": "sgd",
        "momentum": 0.9,
        "seed": 0,
        "l1_lambda": 0.0,
    },
    "accel": {
        "clock_hz": 100e6,
        "num_channels": 8,
        "macs_per_channel": 16,
        "fifo_depth": 512,
        "total_bits": 16,
        "frac_bits": 8,
        "signed": True,
        "power_watts": 5.93,
        "backpressure": True,
    },
}


def _merge(base: dict, update, path: str):
    if not isinstance(update, dict):
        raise ConfigError(f"config section {path or 'top level'} must be an object")
    for key, value in update.items():
        dotted = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key {dotted!r}")
        if isinstance(base[key], dict):
            _merge(base[key], value, dotted)
        else:
            base[key] = value


@dataclass
class RunConfig:
    """Typed view of one merged configuration."""

    spec: NetworkSpec
    noise: NoiseConfig
    split: SplitConfig
    train: TrainConfig
    accel: AccelConfig
    raw: dict

    @classmethod
    def from_dict(cls, overrides: dict | None = None) -> "RunConfig":
        merged = json.loads(json.dumps(DEFAULTS))  # deep copy
        if overrides:
            _merge(merged, overrides, "")
        try:
            spec = build_network(
                merged["network"]["channel_profile"],
                input_hw=merged["network"]["input_hw"],
                canvas_hw=merged["network"]["canvas_hw"],
                strict_pool=merged["network"]["strict_pool"],
            )
            noise = NoiseConfig(**merged["noise"])
            split = SplitConfig(**merged["split"])
            train = TrainConfig(**merged["train"])
            a = merged["accel"]
            accel = AccelConfig(
                clock_hz=a["clock_hz"],
                num_channels=a["num_channels"],
                macs_per_channel=a["macs_per_channel"],
                fifo_depth=a["fifo_depth"],
                fixed_format=FixedPointFormat(
                    a["total_bits"], a["frac_bits"], a["signed"]
                ),
                power_watts=a["power_watts"],
                backpressure=a["backpressure"],
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return cls(spec, noise, split, train, accel, merged)

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def override_seed(self, seed: int) -> "RunConfig":
        """Pin every stochastic stage to one master seed."""
        raw = json.loads(json.dumps(self.raw))
        raw["noise"]["seed"] = seed
        raw["split"]["seed"] = seed
        raw["train"]["seed"] = seed
        return RunConfig.from_dict(raw)

    def override_train(self, **fields) -> "RunConfig":
        raw = json.loads(json.dumps(self.raw))
        for key, value in fields.items():
            if value is None:
                continue
            if key not in raw["train"]:
                raise ConfigError(f"unknown train field {key!r}")
            raw["train"][key] = value
        return RunConfig.from_dict(raw)
