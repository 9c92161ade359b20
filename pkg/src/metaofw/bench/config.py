"""Experiment configuration: TOML files plus command-line overrides."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import tomli

from ..control.controller import KINDS
from .noise import NoiseSpec
from .schedules import WeightSchedule

__all__ = ["PlantSpec", "ExperimentConfig", "load_config", "config_from_dict", "GAIN_RULES"]

GAIN_RULES = ("auto", "lqr", "zero")


@dataclass(frozen=True)
class PlantSpec:
    """Nominal plant ``A = rho * (random orthogonal)``, ``B`` Gaussian with unit
    operator norm, both drawn from ``seed``; ``gain`` picks the stabilizing rule."""

    rho: float = 0.9
    seed: int = 0
    gain: str = "auto"

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError("plant rho must lie in (0, 1)")
        if self.gain not in GAIN_RULES:
            raise ValueError(f"unknown gain rule {self.gain!r}; expected one of {GAIN_RULES}")


@dataclass(frozen=True)
class ExperimentConfig:
    algorithms: tuple = ("meta_ofw", "scream", "ader", "ogd")
    dx: int = 2
    du: int = 1
    T: int = 2000
    H: int = 3
    seeds: tuple = tuple(range(10))
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    schedule: WeightSchedule = field(default_factory=WeightSchedule)
    plant: PlantSpec = field(default_factory=PlantSpec)
    out: str = "results.csv"
    workers: int = 1
    kappa: Optional[float] = None
    gamma: Optional[float] = None

    def __post_init__(self):
        bad = [a for a in self.algorithms if a not in KINDS]
        if not self.algorithms or bad:
            raise ValueError(f"unknown algorithms {bad}; expected a subset of {KINDS}")
        for name in ("dx", "du", "T", "H", "workers"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{name} must be a positive integer")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if (self.kappa is None) != (self.gamma is None):
            raise ValueError("kappa and gamma overrides must be given together")
        if self.kappa is not None and (self.kappa < 1.0 or not 0.0 < self.gamma <= 1.0):
            raise ValueError("kappa override must be >= 1 and gamma in (0, 1]")

    def with_overrides(self, seed=None, trials=None, out=None, algorithms=None,
                       dims=None) -> "ExperimentConfig":
        """CLI overrides: ``--seed`` / ``--trials`` rebuild the seed list."""
        changes = {}
        if seed is not None or trials is not None:
            first = self.seeds[0] if seed is None else seed
            n = len(self.seeds) if trials is None else trials
            if n < 1:
                raise ValueError("--trials must be >= 1")
            changes["seeds"] = tuple(range(first, first + n))
        if out is not None:
            changes["out"] = out
        if algorithms is not None:
            changes["algorithms"] = tuple(algorithms)
        if dims is not None:
            changes["dx"], changes["du"] = dims
        return replace(self, **changes)


def config_from_dict(d: dict) -> ExperimentConfig:
    d = dict(d)
    known = {"algorithms", "T", "H", "seeds", "trials", "seed", "out", "workers", "system",
             "noise", "schedule", "constants"}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kw = {}
    for key in ("T", "H", "out", "workers"):
        if key in d:
            kw[key] = d[key]
    if "algorithms" in d:
        kw["algorithms"] = tuple(d["algorithms"])
    if "seeds" in d:
        kw["seeds"] = tuple(int(s) for s in d["seeds"])
    elif "trials" in d or "seed" in d:
        first, n = int(d.get("seed", 0)), int(d.get("trials", 10))
        kw["seeds"] = tuple(range(first, first + n))
    system = dict(d.get("system", {}))
    kw["dx"] = system.pop("dx", 2)
    kw["du"] = system.pop("du", 1)
    kw["plant"] = PlantSpec(**system)
    noise = dict(d.get("noise", {}))
    kw["noise"] = NoiseSpec(distribution=noise.pop("distribution", "gaussian"),
                            params=noise.pop("params", {}), **noise)
    kw["schedule"] = WeightSchedule(**d.get("schedule", {}))
    constants = d.get("constants", {})
    kw["kappa"], kw["gamma"] = constants.get("kappa"), constants.get("gamma")
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        data = tomli.load(fh)
    try:
        return config_from_dict(data)
    except TypeError as exc:  # unexpected keyword inside a section
        raise ValueError(f"invalid config section: {exc}") from exc
