"""Shared configuration for the command-line tools.

Settings live in a flat JSON object; command-line flags override file values,
which override the defaults below. Every command echoes the resulting
effective config into its output artifacts so a run can be reproduced from
any file it wrote.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict

from .classical import EstimatorConfig
from .datasets import DifficultyLevel
from .model import TrainConfig

DEFAULTS: Dict[str, Any] = {
    "seed": 0,
    "out": "runs",
    "level": "pm45",
    # dataset synthesis
    "kind": "stripes",
    "n": 2400,
    "image_size": 128,
    "counts": None,  # derived as roughly 80/10/10 of n when not set
    # training
    "backbone": "tiny_desk",
    "loss": "circular",
    "epochs": 30,
    "batch_size": 32,
    "learning_rate": 0.1,
    "decay_rho": 0.95,
    "epsilon": 1e-7,
    # estimation / correction
    "method": "hough-var",
    "rotation_policy": "fill_black",
    # classical estimator knobs
    "estimator_search_range": [-45.0, 45.0],
    "estimator_angle_step": 0.5,
    "estimator_edge_threshold": 0.9,
    "estimator_num_rho_bins": 0,
    "estimator_fourier_min_peak_ratio": 3.0,
}


def load_config_file(path: str | Path) -> Dict[str, Any]:
    """Parse a JSON config file, rejecting keys that aren't settings."""
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except OSError as exc:
        raise ValueError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must hold a JSON object, got {type(data).__name__}")
    unknown = sorted(set(data) - set(DEFAULTS))
    if unknown:
        raise ValueError(f"config file {path} has unknown settings: {', '.join(unknown)}")
    return data


def effective_config(
    file_config: Dict[str, Any] | None = None, overrides: Dict[str, Any] | None = None
) -> Dict[str, Any]:
    """defaults <- config file <- explicit flags, dropping None overrides."""
    cfg = dict(DEFAULTS)
    cfg.update(file_config or {})
    cfg.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = sorted(set(cfg) - set(DEFAULTS))
    if unknown:
        raise ValueError(f"unknown settings: {', '.join(unknown)}")
    return cfg


def estimator_config(cfg: Dict[str, Any]) -> EstimatorConfig:
    lo, hi = cfg["estimator_search_range"]
    return EstimatorConfig(
        search_range=(float(lo), float(hi)),
        angle_step=float(cfg["estimator_angle_step"]),
        edge_threshold=float(cfg["estimator_edge_threshold"]),
        num_rho_bins=int(cfg["estimator_num_rho_bins"]),
        fourier_min_peak_ratio=float(cfg["estimator_fourier_min_peak_ratio"]),
    )


def train_config(cfg: Dict[str, Any]) -> TrainConfig:
    return TrainConfig(
        level=DifficultyLevel.parse(cfg["level"]),
        loss=cfg["loss"],
        learning_rate=float(cfg["learning_rate"]),
        decay_rho=float(cfg["decay_rho"]),
        epsilon=float(cfg["epsilon"]),
        batch_size=int(cfg["batch_size"]),
        epochs=int(cfg["epochs"]),
        seed=int(cfg["seed"]),
    )
