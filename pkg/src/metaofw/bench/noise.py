"""Centered noise families and the perturbed-plant disturbance process."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = ["DISTRIBUTIONS", "DEFAULT_PARAMS", "NoiseSpec", "sample_noise", "NoiseProcess",
           "clip_radial"]

DEFAULT_PARAMS = {
    "gaussian": {"std": 0.25},
    "uniform": {"half_width": 0.5},
    "gamma": {"shape": 2.0, "scale": 0.5},
    "beta": {"a": 2.0, "b": 2.0},
    "exponential": {"scale": 1.0},
    "weibull": {"shape": 1.5, "scale": 1.0},
}
DISTRIBUTIONS = tuple(DEFAULT_PARAMS)


@dataclass(frozen=True)
class NoiseSpec:
    """Distribution tag, its parameters, perturbation scales and the clip bound ``W``.

    Missing parameters fall back to :data:`DEFAULT_PARAMS`. ``delta_A`` and
    ``delta_B`` scale the centered samples filling the plant perturbations.
    """

    distribution: str = "gaussian"
    params: dict = field(default_factory=dict)
    delta_A: float = 0.05
    delta_B: float = 0.05
    W: float = 1.0

    def __post_init__(self):
        if self.distribution not in DEFAULT_PARAMS:
            raise ValueError(f"unknown distribution {self.distribution!r}; "
                             f"expected one of {DISTRIBUTIONS}")
        merged = dict(DEFAULT_PARAMS[self.distribution])
        unknown = set(self.params) - set(merged)
        if unknown:
            raise ValueError(f"unknown {self.distribution} parameters: {sorted(unknown)}")
        merged.update({k: float(v) for k, v in self.params.items()})
        if any(v <= 0 or not math.isfinite(v) for v in merged.values()):
            raise ValueError(f"{self.distribution} parameters must be positive and finite")
        object.__setattr__(self, "params", merged)
        if self.delta_A < 0 or self.delta_B < 0:
            raise ValueError("perturbation scales must be nonnegative")
        if not self.W > 0:
            raise ValueError("clip bound W must be positive")

    @property
    def mean(self) -> float:
        """Analytic mean subtracted from raw samples."""
        p, d = self.params, self.distribution
        if d in ("gaussian", "uniform"):
            return 0.0
        if d == "gamma":
            return p["shape"] * p["scale"]
        if d == "beta":
            return p["a"] / (p["a"] + p["b"])
        if d == "exponential":
            return p["scale"]
        return p["scale"] * math.gamma(1.0 + 1.0 / p["shape"])

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        p, d = self.params, self.distribution
        if d == "gaussian":
            raw = rng.normal(0.0, p["std"], size)
        elif d == "uniform":
            raw = rng.uniform(-p["half_width"], p["half_width"], size)
        elif d == "gamma":
            raw = rng.gamma(p["shape"], p["scale"], size)
        elif d == "beta":
            raw = rng.beta(p["a"], p["b"], size)
        elif d == "exponential":
            raw = rng.exponential(p["scale"], size)
        else:
            raw = p["scale"] * rng.weibull(p["shape"], size)
        return raw - self.mean


def sample_noise(spec: NoiseSpec, t: int, rng: np.random.Generator, d_x: int, d_u: int):
    """``(w~_t, Delta_A, Delta_B)`` for step ``t``, drawn from ``rng`` in that order."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    w = spec.draw(rng, d_x)
    dA = spec.delta_A * spec.draw(rng, (d_x, d_x))
    dB = spec.delta_B * spec.draw(rng, (d_x, d_u))
    return w, dA, dB


def clip_radial(w: np.ndarray, W: float):
    """Scale ``w`` into the ``W``-ball; returns ``(w, clipped)``."""
    n = float(np.linalg.norm(w))
    if n > W:
        return w * (W / n), True
    return w, False


class NoiseProcess:
    """Callable ``(t, x, u) -> w_t = clip(Delta_A x + Delta_B u + w~)``.

    Samples are drawn lazily per step from one seeded stream, so the sequence
    of raw samples depends only on the seed, not on the trajectory.
    """

    def __init__(self, spec: NoiseSpec, d_x: int, d_u: int, seed: int,
                 rng: Optional[np.random.Generator] = None):
        self.spec, self.d_x, self.d_u = spec, d_x, d_u
        self.rng = np.random.default_rng(seed) if rng is None else rng
        self.steps = 0
        self.clipped = 0
        self.max_norm = 0.0

    def __call__(self, t, x, u):
        w, dA, dB = sample_noise(self.spec, t, self.rng, self.d_x, self.d_u)
        w, hit = clip_radial(dA @ x + dB @ u + w, self.spec.W)
        self.steps += 1
        self.clipped += hit
        self.max_norm = max(self.max_norm, float(np.linalg.norm(w)))
        return w

    @property
    def clip_rate(self) -> float:
        return self.clipped / self.steps if self.steps else 0.0
