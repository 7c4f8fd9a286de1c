"""Run configuration: defaults, benchmark presets and JSON config files.

Values are resolved in order: built-in defaults, then the selected preset,
then a config file, then command-line flags. The resolved configuration is
stored with every run, and feeding it back reproduces the run exactly.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from .neuron import AsnParams

__all__ = ["COMMAND_PRESETS", "ConfigError", "PRESETS", "RunConfig", "load_config", "resolve_config"]


class ConfigError(ValueError):
    pass


def _ratios(lo: float, hi: float, n: int) -> List[float]:
    return [float(v) for v in np.linspace(lo, hi, n)]


PRESETS: Dict[str, Dict[str, Any]] = {
    "iris": {
        "dataset": "iris",
        "theta0": 0.0128,
        "mf_ratio": _ratios(0.1, 3.0, 30),
        "hidden": [30, 30],
        "lr": 0.1,
        "dropout": 0.5,
        "epochs": 800,
        "batch": 5,
    },
    "sonar": {
        "dataset": "sonar",
        "theta0": 1e-4,
        "mf_ratio": _ratios(0.1, 3.0, 30),
        "hidden": [50, 50],
        "lr": 0.2,
        "dropout": 0.5,
        "epochs": 1000,
        "batch": 5,
    },
    "mnist-nn": {
        "dataset": "mnist",
        "theta0": 3.9e-3,
        "mf_ratio": _ratios(0.1, 3.5, 35),
        "hidden": [1200, 1200],
        "lr": 1.0,
        "momentum": 0.5,
        "dropout": 0.5,
        "epochs": 15,
        "batch": 100,
        "limit": 1000,
    },
    # convolutional weights can only be imported, not trained
    "mnist-cnn": {
        "dataset": "mnist",
        "theta0": 3.9e-3,
        "mf_ratio": _ratios(0.1, 3.5, 35),
        "limit": 1000,
    },
    "xor": {
        "theta0": 0.1,
        "mf_ratio": [1.0],
        "tau_kappa": 25.0,
        "hidden": [5],
        "seed": 1,
    },
    "encode": {"theta0": 0.1, "mf_ratio": [0.1, 1.0], "duration": 1000.0},
    "rate": {"theta0": 0.1, "mf_ratio": [0.1, 0.25, 0.5, 0.75, 1.0]},
    "tau": {"theta0": 0.1},
    "digits": {
        "dataset": "mnist",
        "theta0": 3.9e-3,
        "mf_ratio": [0.5, 1.0, 3.0],
        "hidden": [100, 100],
        "lr": 0.05,
        "dropout": 0.2,
        "epochs": 40,
        "batch": 10,
    },
}


@dataclass
class RunConfig:
    command: str = ""
    preset: Optional[str] = None
    out: Optional[str] = None
    seed: int = 0

    # neuron parameters; mf (absolute) overrides mf_ratio when given
    theta0: float = 0.1
    mf_ratio: List[float] = field(default_factory=lambda: [0.1])
    mf: Optional[List[float]] = None
    tau_kappa: float = 50.0
    tau_gamma: float = 15.0
    tau_smooth: float = 2.5
    readout_tau: float = 10.0
    dt: float = 1.0
    duration: float = 500.0

    # data and weights
    dataset: Optional[str] = None
    data: Optional[str] = None
    images: Optional[str] = None
    labels: Optional[str] = None
    train_images: Optional[str] = None
    train_labels: Optional[str] = None
    split: Optional[str] = None
    weights: Optional[str] = None
    limit: Optional[int] = None

    # training
    hidden: List[int] = field(default_factory=lambda: [30, 30])
    lr: float = 0.1
    dropout: float = 0.5
    epochs: int = 800
    batch: int = 5
    momentum: float = 0.0
    bias: bool = False

    # single-neuron benches
    amplitude: float = 1.0
    onset: float = 0.0
    offset: Optional[float] = None
    s_max: float = 2.0
    s_steps: int = 21
    warmup: float = 500.0
    taus: List[float] = field(default_factory=lambda: [10.0, 25.0, 50.0, 100.0, 200.0])
    target_rate: float = 35.0

    # streaming benches
    segment_ms: float = 200.0
    patterns: List[int] = field(default_factory=lambda: [0, 1, 3, 2, 0, 2, 1, 3, 0, 1, 2, 3, 1])
    noise_ms: float = 100.0
    digit_a_ms: float = 300.0
    digit_b_ms: float = 300.0
    trials: int = 300
    decision_threshold: float = 0.3

    # cost model
    pulse_bits: float = 32.0
    overhead_bits: float = 32.0
    ann_rate: float = 1000.0

    def mf_values(self) -> List[float]:
        if self.mf is not None:
            return [float(v) for v in self.mf]
        return [float(q) * self.theta0 for q in self.mf_ratio]

    def params(self, mf: Optional[float] = None) -> AsnParams:
        return AsnParams(
            theta0=self.theta0,
            mf=self.mf_values()[0] if mf is None else mf,
            tau_kappa=self.tau_kappa,
            tau_gamma=self.tau_gamma,
            tau_smooth=self.tau_smooth,
            dt=self.dt,
        )

    def all_params(self) -> List[AsnParams]:
        return [self.params(m) for m in self.mf_values()]

    def validate(self) -> "RunConfig":
        if self.preset is not None and self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; choose from {', '.join(PRESETS)}")
        for name in ("data", "images", "labels", "train_images", "train_labels", "weights", "split"):
            path = getattr(self, name)
            if path is not None and not os.path.exists(path):
                raise ConfigError(f"{name.replace('_', '-')} file not found: {path}")
        if not self.mf_values():
            raise ConfigError("at least one mf value is required")
        if not self.duration > 0:
            raise ConfigError("duration must be positive")
        if not self.readout_tau > 0:
            raise ConfigError("readout-tau must be positive")
        try:
            self.all_params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}


def _check_keys(values: Dict[str, Any], where: str) -> None:
    unknown = sorted(set(values) - _FIELDS)
    if unknown:
        raise ConfigError(f"{where}: unknown setting(s) {', '.join(unknown)}")


def load_config(path) -> Dict[str, Any]:
    try:
        with open(os.fspath(path), encoding="utf-8") as f:
            values = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}") from None
    if not isinstance(values, dict):
        raise ConfigError(f"{path}: top level must be an object")
    _check_keys(values, os.fspath(path))
    return values


# preset applied when a command is run without one
COMMAND_PRESETS = {
    "bench-encode": "encode",
    "bench-rate": "rate",
    "bench-tau": "tau",
    "bench-xor": "xor",
    "bench-switch": "digits",
}


def resolve_config(command: str, flags: Dict[str, Any], config_path=None) -> RunConfig:
    """Merge defaults, preset, config file and flags (later wins)."""
    file_values = load_config(config_path) if config_path else {}
    flags = {k: v for k, v in flags.items() if v is not None}
    _check_keys(flags, "flags")
    preset = flags.get("preset", file_values.get("preset", COMMAND_PRESETS.get(command)))
    merged: Dict[str, Any] = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
        merged.update(PRESETS[preset])
    merged.update(file_values)
    merged.update(flags)
    if "mf_ratio" in flags and "mf" not in flags:
        merged["mf"] = None
    merged["command"] = command
    merged["preset"] = preset
    if merged.get("out") is None:
        merged["out"] = os.path.join("runs", command)
    return RunConfig(**merged).validate()
