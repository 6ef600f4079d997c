"""Workbench configuration: dataclass defaults, INI overrides, env lookup.

One section per module; every field has a working default so the workbench
runs with no config file at all. WORKBENCH_CONFIG points at an alternative
file when set.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from typing import Optional, Tuple

ENV_CONFIG = "WORKBENCH_CONFIG"


@dataclass
class BusConfig:
    log_path: Optional[str] = None


@dataclass
class ForecastingConfig:
    hidden: int = 32
    lr: float = 0.1
    epochs: int = 120
    batch_size: int = 32
    seed: int = 0
    knn_k: int = 5
    knn_window: int = 500
    mi_bins: int = 16
    croston_alpha: float = 0.1
    balance_training: bool = True  # oversample the minority before retrains


@dataclass
class ActiveLearningConfig:
    strategy: str = "entropy"
    batch_size: int = 20
    lease_ttl_s: float = 300.0
    retrain_every: int = 20
    attach_hints: bool = True
    stream_threshold: float = 0.5
    stream_budget: int = 100
    stream_horizon: int = 1000
    seed: int = 0


@dataclass
class SimrealConfig:
    image_size: int = 64
    noise_std: float = 0.08
    target_defect_ratio: float = 0.3
    balancer_window: int = 100


@dataclass
class IntentionConfig:
    horizon_s: float = 2.0
    buffer_m: float = 1.0
    corridor: Tuple[Tuple[float, float], ...] = ((4.0, -1.0), (6.0, -1.0), (6.0, 8.0), (4.0, 8.0))


@dataclass
class GatewayConfig:
    host: str = "127.0.0.1"
    port: int = 8787
    policies_path: Optional[str] = None
    rules_path: Optional[str] = None
    enrichment_fixtures_path: Optional[str] = None
    audit_log_path: Optional[str] = None


@dataclass
class WorkbenchConfig:
    bus: BusConfig = field(default_factory=BusConfig)
    forecasting: ForecastingConfig = field(default_factory=ForecastingConfig)
    active_learning: ActiveLearningConfig = field(default_factory=ActiveLearningConfig)
    simreal: SimrealConfig = field(default_factory=SimrealConfig)
    intention: IntentionConfig = field(default_factory=IntentionConfig)
    gateway: GatewayConfig = field(default_factory=GatewayConfig)


def _apply_section(obj, parser: configparser.ConfigParser, section: str) -> None:
    if not parser.has_section(section):
        return
    for key, raw in parser.items(section):
        if not hasattr(obj, key):
            raise ValueError(f"unknown config key [{section}] {key}")
        current = getattr(obj, key)
        if isinstance(current, bool):
            value = raw.strip().lower() in ("1", "true", "yes", "on")
        elif isinstance(current, int):
            value = int(raw)
        elif isinstance(current, float):
            value = float(raw)
        elif isinstance(current, tuple):
            value = tuple(
                tuple(float(x) for x in pair.split(","))
                for pair in raw.replace("(", "").replace(")", "").split(";")
                if pair.strip()
            )
        else:
            value = raw if raw.strip() else None
        setattr(obj, key, value)


def load_config(path: Optional[str] = None) -> WorkbenchConfig:
    """Defaults, overridden by an INI file when present.

    Resolution order: explicit path argument, then $WORKBENCH_CONFIG.
    """
    cfg = WorkbenchConfig()
    path = path or os.environ.get(ENV_CONFIG)
    if not path:
        return cfg
    if not os.path.exists(path):
        raise FileNotFoundError(f"config file {path!r} not found")
    parser = configparser.ConfigParser()
    parser.read(path)
    _apply_section(cfg.bus, parser, "bus")
    _apply_section(cfg.forecasting, parser, "forecasting")
    _apply_section(cfg.active_learning, parser, "active_learning")
    _apply_section(cfg.simreal, parser, "simreal")
    _apply_section(cfg.intention, parser, "intention")
    _apply_section(cfg.gateway, parser, "gateway")
    return cfg
