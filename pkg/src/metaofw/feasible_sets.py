"""Convex feasible domains with linear-minimization oracles and projections.

Points are plain numpy arrays: shape ``(d,)`` for the vector sets and
``(H, d_u, d_x)`` for :class:`BlockOpNormBall`. Inner products and norms are
the Euclidean/Frobenius ones taken over all entries.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

__all__ = [
    "FeasibleSet",
    "Box",
    "Ball",
    "Simplex",
    "BlockOpNormBall",
    "lmo",
    "project",
    "diameter",
    "contains",
    "initial_point",
    "probe_points",
    "inner",
    "norm",
]

N_PROBES = 64


def inner(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius inner product over all entries."""
    return float(np.vdot(a, b))


def norm(a: np.ndarray) -> float:
    return float(np.sqrt(np.vdot(a, a)))


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


class FeasibleSet:
    """Base class; concrete sets fill in the oracle methods."""

    shape: tuple

    def _check(self, x: np.ndarray, name: str = "point") -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != self.shape:
            raise ValueError(f"{name} has shape {x.shape}, expected {self.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError(f"{name} has non-finite entries")
        return x

    def lmo(self, g: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def project(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def diameter(self) -> float:
        raise NotImplementedError

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        raise NotImplementedError

    def initial_point(self) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """A random feasible point (used by property checks)."""
        raise NotImplementedError

    def probe_points(self) -> list[np.ndarray]:
        """Deterministic feasible points approximating a sup over the set."""
        cube = qmc.Halton(d=int(np.prod(self.shape)), scramble=True, seed=0).random(N_PROBES)
        return [self.project((2.0 * c - 1.0).reshape(self.shape) * self._probe_scale()) for c in cube]

    def _probe_scale(self) -> float:
        return 1.0


@dataclass(frozen=True, eq=False)
class Box(FeasibleSet):
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo, hi = _frozen(self.lower), _frozen(self.upper)
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise ValueError("Box bounds must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("Box bounds must be finite")
        if np.any(lo > hi):
            raise ValueError("Box requires lower <= upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def shape(self):
        return self.lower.shape

    def lmo(self, g):
        g = self._check(g, "gradient")
        return np.where(g < 0, self.upper, self.lower)

    def project(self, x):
        x = self._check(x)
        return np.clip(x, self.lower, self.upper)

    def diameter(self):
        return norm(self.upper - self.lower)

    def contains(self, x, tol=0.0):
        x = self._check(x)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def initial_point(self):
        return 0.5 * (self.lower + self.upper)

    def sample(self, rng):
        return rng.uniform(self.lower, self.upper)

    def vertices(self) -> list[np.ndarray]:
        pairs = zip(self.lower, self.upper)
        return [np.array(v) for v in itertools.product(*pairs)]

    def probe_points(self):
        if self.shape[0] <= 10:
            return self.vertices()
        cube = qmc.Halton(d=self.shape[0], scramble=True, seed=0).random(N_PROBES)
        return [self.lower + c * (self.upper - self.lower) for c in cube]


@dataclass(frozen=True, eq=False)
class Ball(FeasibleSet):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = _frozen(self.center)
        if c.ndim != 1:
            raise ValueError("Ball center must be a 1-d array")
        if not np.isfinite(self.radius) or self.radius < 0:
            raise ValueError("Ball radius must be a nonnegative finite number")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def shape(self):
        return self.center.shape

    def lmo(self, g):
        g = self._check(g, "gradient")
        gn = norm(g)
        if gn == 0.0:
            return self.center.copy()
        return self.center - self.radius * g / gn

    def project(self, x):
        x = self._check(x)
        d = x - self.center
        dn = norm(d)
        if dn <= self.radius:
            return x.copy()
        return self.center + d * (self.radius / dn)

    def diameter(self):
        return 2.0 * self.radius

    def contains(self, x, tol=0.0):
        x = self._check(x)
        return norm(x - self.center) <= self.radius + tol

    def initial_point(self):
        return self.center.copy()

    def sample(self, rng):
        d = self.shape[0]
        u = rng.standard_normal(d)
        u /= max(norm(u), 1e-300)
        return self.center + self.radius * rng.uniform() ** (1.0 / d) * u

    def _probe_scale(self):
        return self.radius

    def probe_points(self):
        cube = qmc.Halton(d=self.shape[0], scramble=True, seed=0).random(N_PROBES)
        return [self.project(self.center + self.radius * (2.0 * c - 1.0)) for c in cube]


@dataclass(frozen=True, eq=False)
class Simplex(FeasibleSet):
    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError("Simplex dim must be a positive integer")

    @property
    def shape(self):
        return (int(self.dim),)

    def lmo(self, g):
        g = self._check(g, "gradient")
        v = np.zeros(self.dim)
        v[int(np.argmin(g))] = 1.0  # argmin returns the first minimal index
        return v

    def project(self, x):
        x = self._check(x)
        return project_simplex(x)

    def diameter(self):
        return float(np.sqrt(2.0)) if self.dim > 1 else 0.0

    def contains(self, x, tol=0.0):
        x = self._check(x)
        return bool(np.all(x >= -tol) and abs(x.sum() - 1.0) <= tol)

    def initial_point(self):
        return np.full(self.dim, 1.0 / self.dim)

    def sample(self, rng):
        return rng.dirichlet(np.ones(self.dim))

    def vertices(self):
        return list(np.eye(self.dim))

    def probe_points(self):
        return self.vertices()


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sorted-threshold rule)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


@dataclass(frozen=True, eq=False)
class BlockOpNormBall(FeasibleSet):
    """Product of operator-norm balls ``{M : ||M[i]||_op <= radii[i]}``."""

    num_blocks: int
    rows: int
    cols: int
    radii: np.ndarray

    def __post_init__(self):
        for name in ("num_blocks", "rows", "cols"):
            val = getattr(self, name)
            if int(val) != val or val < 1:
                raise ValueError(f"BlockOpNormBall {name} must be a positive integer")
        r = _frozen(self.radii)
        if r.shape != (self.num_blocks,):
            raise ValueError(f"radii must have length {self.num_blocks}")
        if np.any(r < 0) or not np.all(np.isfinite(r)):
            raise ValueError("radii must be nonnegative and finite")
        object.__setattr__(self, "radii", r)

    @classmethod
    def for_control(cls, H: int, d_u: int, d_x: int, kappa: float, gamma: float,
                    kappa_B: float) -> "BlockOpNormBall":
        """The DAC parameter set with radii ``kappa_B * kappa**3 * (1 - gamma)**i``."""
        radii = kappa_B * kappa**3 * (1.0 - gamma) ** np.arange(H)
        return cls(H, d_u, d_x, radii)

    @property
    def shape(self):
        return (int(self.num_blocks), int(self.rows), int(self.cols))

    def lmo(self, g):
        g = self._check(g, "gradient")
        U, _, Vt = np.linalg.svd(g, full_matrices=False)
        out = -self.radii[:, None, None] * (U @ Vt)
        # A zero gradient block leaves the polar factor undefined; pick the center.
        out[~np.any(g, axis=(1, 2))] = 0.0
        return out

    def project(self, x):
        x = self._check(x)
        U, s, Vt = np.linalg.svd(x, full_matrices=False)
        s = np.minimum(s, self.radii[:, None])
        return np.einsum("hik,hk,hkj->hij", U, s, Vt)

    def diameter(self):
        d = min(self.rows, self.cols)
        return 2.0 * float(np.sqrt(d * np.sum(self.radii**2)))

    def contains(self, x, tol=0.0):
        x = self._check(x)
        op = np.linalg.norm(x, ord=2, axis=(1, 2))
        return bool(np.all(op <= self.radii + tol))

    def initial_point(self):
        return np.zeros(self.shape)

    def sample(self, rng):
        g = rng.standard_normal(self.shape)
        U, s, Vt = np.linalg.svd(g, full_matrices=False)
        s = rng.uniform(0.0, 1.0, size=s.shape) * self.radii[:, None]
        return np.einsum("hik,hk,hkj->hij", U, s, Vt)

    def _probe_scale(self):
        return float(self.radii.max()) if self.radii.size else 1.0


def lmo(set_: FeasibleSet, g: np.ndarray) -> np.ndarray:
    """Minimizer of ``<g, v>`` over the set."""
    return set_.lmo(g)


def project(set_: FeasibleSet, x: np.ndarray) -> np.ndarray:
    return set_.project(x)


def diameter(set_: FeasibleSet) -> float:
    return set_.diameter()


def contains(set_: FeasibleSet, x: np.ndarray, tol: float = 0.0) -> bool:
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return set_.contains(x, tol)


def initial_point(set_: FeasibleSet) -> np.ndarray:
    return set_.initial_point()


def probe_points(set_: FeasibleSet) -> list[np.ndarray]:
    return set_.probe_points()
