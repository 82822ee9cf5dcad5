"""Run configuration: tolerances, model weights and solver limits.

All numerical tolerances live here so that the harness can override them
from a single TOML or JSON file.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any


@dataclass(frozen=True)
class Tolerances:
    feasibility: float = 1e-8
    duality_gap: float = 1e-6
    integrality: float = 1e-6


@dataclass(frozen=True)
class Limits:
    time_limit: float = 3600.0
    node_limit: int = 100_000
    max_binaries: int = 24
    benders_iterations: int = 500
    benders_gap: float = 1e-4
    bnb_gap: float = 1e-6
    enumeration_cap: int = 12


@dataclass(frozen=True)
class Config:
    tolerances: Tolerances = field(default_factory=Tolerances)
    limits: Limits = field(default_factory=Limits)
    alpha: float = 0.99
    # dual bound policy for McCormick cells: multiple of the largest bid price
    ybar_factor: float = 10.0
    heuristic_every: int = 30
    core_point: float = 0.5
    core_weight: float = 0.5
    price_cap: float | None = None
    preprocess: bool = True
    seed: int = 0

    def with_overrides(self, **kwargs) -> "Config":
        tol = kwargs.pop("tolerances", None)
        lim = kwargs.pop("limits", None)
        cfg = replace(self, **kwargs)
        if tol:
            cfg = replace(cfg, tolerances=replace(cfg.tolerances, **tol))
        if lim:
            cfg = replace(cfg, limits=replace(cfg.limits, **lim))
        return cfg

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _split(data: dict[str, Any]) -> dict[str, Any]:
    known = {f.name for f in fields(Config)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return data


def load_config(path: str | Path | None = None) -> Config:
    """Load a config file (``.toml`` or ``.json``); ``None`` gives defaults."""
    if path is None:
        return Config()
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".toml":
        try:
            import tomllib as tomli
        except ImportError:
            import tomli

        data = tomli.loads(text)
    else:
        data = json.loads(text)
    return Config().with_overrides(**_split(data))
