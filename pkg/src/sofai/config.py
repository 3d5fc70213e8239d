"""Experiment configuration, read from a JSON file with strict keys."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .agents import AGENTS, MdftParams, canonical_agent
from .clock import DEFAULT_COSTS
from .grid import GridParams
from .metacog import McConfig
from .rl import RlHyperparams
from .solvers import MODES


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AttentionParams:
    violation_threshold: int = 2
    length_factor: float = 1.5
    s2_only_mode: str = "02"

    def __post_init__(self):
        if self.s2_only_mode not in MODES:
            raise ConfigError(f"s2_only_mode must be one of {MODES}")


@dataclass(frozen=True)
class ExperimentConfig:
    grid_count: int = 10
    trajectories_per_agent: int = 1000
    agents: tuple[str, ...] = AGENTS
    max_steps_per_trajectory: int = 200
    master_seed: int = 0
    moving_average_window: int = 50
    tail_window: int = 200
    clock: str = "monotonic"
    virtual_costs: dict = field(default_factory=lambda: dict(DEFAULT_COSTS))
    grid: GridParams = GridParams()
    mc: McConfig = McConfig()
    rl: RlHyperparams = RlHyperparams()
    mdft: MdftParams = MdftParams()
    attention: AttentionParams = AttentionParams()

    def __post_init__(self):
        if self.grid_count < 0 or self.trajectories_per_agent < 0:
            raise ConfigError("counts must be non-negative")
        if not self.agents:
            raise ConfigError("at least one agent is required")
        object.__setattr__(self, "agents", tuple(canonical_agent(a) for a in self.agents))
        if self.max_steps_per_trajectory < 1 or self.moving_average_window < 1:
            raise ConfigError("step cap and moving-average window must be positive")
        if self.clock not in ("monotonic", "virtual"):
            raise ConfigError("clock must be 'monotonic' or 'virtual'")
        unknown = set(self.virtual_costs) - set(DEFAULT_COSTS)
        if unknown:
            raise ConfigError(f"unknown virtual cost keys {sorted(unknown)}")

    @property
    def agent_order(self) -> tuple[str, ...]:
        return tuple(a for a in AGENTS if a in self.agents)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["agents"] = list(self.agents)
        return d


_SECTIONS = {
    "grid": GridParams,
    "mc": McConfig,
    "rl": RlHyperparams,
    "mdft": MdftParams,
    "attention": AttentionParams,
}


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def config_from_dict(data: dict) -> ExperimentConfig:
    data = dict(data)
    for key, cls in _SECTIONS.items():
        if key in data:
            data[key] = _build(cls, data[key], key)
    if "agents" in data:
        data["agents"] = tuple(data["agents"])
    if "virtual_costs" in data:
        data["virtual_costs"] = {**DEFAULT_COSTS, **data["virtual_costs"]}
    return _build(ExperimentConfig, data, "config")


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(data)
