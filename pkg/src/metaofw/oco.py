"""Single online learners (OFW, projected OGD), loss oracles with memory, and
the non-stationarity / regret trackers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .feasible_sets import Box, FeasibleSet, norm

__all__ = [
    "LossOracle",
    "QuadraticMemoryLoss",
    "OfwState",
    "OgdState",
    "ofw_step",
    "ogd_step",
    "step_size_sqrt_T",
    "step_size_known_variation",
    "step_size_constant",
    "MetricTracker",
    "update_metrics",
    "zero_padded_window",
]


class LossOracle:
    """Time-indexed convex loss with memory ``m``.

    Subclasses implement :meth:`value_with_memory` and :meth:`unary_gradient`
    and set the bound attributes ``a``, ``c`` (values in ``[a, a + c]``),
    ``L`` (coordinate-wise Lipschitz constant) and ``G`` (unary gradient bound).
    """

    m: int = 0
    a: float = 0.0
    c: float = 1.0
    L: float = 1.0
    G: float = 1.0

    def value_with_memory(self, t: int, window: Sequence[np.ndarray]) -> float:
        raise NotImplementedError

    def unary_value(self, t: int, x: np.ndarray) -> float:
        return self.value_with_memory(t, [x] * (self.m + 1))

    def unary_gradient(self, t: int, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def variation_sup(self, t: int, set_: FeasibleSet) -> Optional[float]:
        """Exact ``sup_x |f~_t(x) - f~_{t-1}(x)|`` when available, else ``None``."""
        return None

    def _check_window(self, window):
        if len(window) != self.m + 1:
            raise ValueError(f"window has {len(window)} points, expected m + 1 = {self.m + 1}")


class QuadraticMemoryLoss(LossOracle):
    """``f_t(x_{t-m}, ..., x_t) = s_t / 2 * || sum_k w_k x_{t-m+k} - theta_t ||^2``.

    ``mix`` holds the nonnegative slot weights ``w`` (summing to one), ordered
    oldest first. ``theta`` is either one target vector or a ``(T + 1, d)``
    array indexed by ``t``; ``scale`` likewise a scalar or length ``T + 1``.
    Bounds are computed for the given box domain, which must contain the origin
    so that zero-padded windows stay in the domain.
    """

    def __init__(self, domain: Box, theta, scale=1.0, m: int = 0, mix=None):
        if not isinstance(domain, Box):
            raise TypeError("QuadraticMemoryLoss bounds are derived for Box domains")
        if not domain.contains(np.zeros(domain.shape)):
            raise ValueError("domain must contain the origin")
        self.domain = domain
        self.m = int(m)
        theta = np.asarray(theta, dtype=float)
        self.theta = theta if theta.ndim == 2 else theta[None, :]
        self.scale = np.atleast_1d(np.asarray(scale, dtype=float))
        if np.any(self.scale < 0):
            raise ValueError("scale must be nonnegative")
        mix = np.full(self.m + 1, 1.0 / (self.m + 1)) if mix is None else np.asarray(mix, float)
        if mix.shape != (self.m + 1,) or np.any(mix < 0) or not math.isclose(mix.sum(), 1.0):
            raise ValueError("mix must be m + 1 nonnegative weights summing to one")
        self.mix = mix

        radius = max(self._max_dist(th) for th in self.theta)
        s_max = float(self.scale.max())
        self.a = 0.0
        self.c = 0.5 * s_max * radius**2
        self.G = s_max * radius
        self.L = s_max * radius * float(mix.max())

    def _max_dist(self, th):
        far = np.maximum(np.abs(self.domain.upper - th), np.abs(th - self.domain.lower))
        return norm(far)

    def _theta(self, t):
        return self.theta[t] if len(self.theta) > 1 else self.theta[0]

    def _scale(self, t):
        return float(self.scale[t] if len(self.scale) > 1 else self.scale[0])

    def value_with_memory(self, t, window):
        self._check_window(window)
        z = np.tensordot(self.mix, np.asarray(window, dtype=float), axes=1)
        r = z - self._theta(t)
        return 0.5 * self._scale(t) * float(r @ r)

    def unary_value(self, t, x):
        r = np.asarray(x, dtype=float) - self._theta(t)
        return 0.5 * self._scale(t) * float(r @ r)

    def unary_gradient(self, t, x):
        return self._scale(t) * (np.asarray(x, dtype=float) - self._theta(t))

    def variation_sup(self, t, set_):
        if t < 1 or set_ is not self.domain:
            return None
        th = self._theta(t)
        if not np.array_equal(th, self._theta(t - 1)):
            return None
        # Same target: the difference is (ds / 2) ||x - theta||^2, maximized at the far corner.
        return 0.5 * abs(self._scale(t) - self._scale(t - 1)) * self._max_dist(th) ** 2


@dataclass(frozen=True)
class OfwState:
    x: np.ndarray
    eta: float

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"OFW step size must lie in (0, 1], got {self.eta}")


@dataclass(frozen=True)
class OgdState:
    x: np.ndarray
    eta: float

    def __post_init__(self):
        if not self.eta > 0.0:
            raise ValueError(f"OGD step size must be positive, got {self.eta}")


def ofw_step(state: OfwState, set_: FeasibleSet, g: np.ndarray) -> OfwState:
    """One Frank-Wolfe move toward the LMO vertex: ``x <- (1 - eta) x + eta lmo(g)``."""
    v = set_.lmo(g)
    return replace(state, x=(1.0 - state.eta) * state.x + state.eta * v)


def ogd_step(state: OgdState, set_: FeasibleSet, g: np.ndarray) -> OgdState:
    g = np.asarray(g, dtype=float)
    if g.shape != state.x.shape:
        raise ValueError(f"gradient has shape {g.shape}, expected {state.x.shape}")
    return replace(state, x=set_.project(state.x - state.eta * g))


def step_size_sqrt_T(T: int) -> float:
    if T < 1:
        raise ValueError("T must be >= 1")
    return min(1.0, 1.0 / math.sqrt(T))


def step_size_known_variation(T: int, v_bar: float) -> float:
    """Step size for a known bound on the loss variation."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if v_bar < 0:
        raise ValueError("v_bar must be nonnegative")
    return min(1.0, math.sqrt((1.0 + v_bar) / T))


def step_size_constant(eta: float) -> float:
    """User-supplied constant step size (the ``sqrt(c / b)`` mode has no derivable ``b``)."""
    if not 0.0 < eta <= 1.0:
        raise ValueError("constant step size must lie in (0, 1]")
    return float(eta)


def zero_padded_window(history: Sequence[np.ndarray], current: np.ndarray, m: int) -> list:
    """The last ``m + 1`` decisions ending at ``current``, padded with zeros."""
    past = list(history)[-m:] if m > 0 else []
    pad = [np.zeros_like(current)] * (m - len(past))
    return pad + past + [current]


@dataclass
class MetricTracker:
    learner_loss: float = 0.0
    comparator_loss: float = 0.0
    V_T: float = 0.0
    D_T: float = 0.0
    C_T: float = 0.0
    switching: float = 0.0
    prev_grad: Optional[np.ndarray] = field(default=None, repr=False)
    prev_x: Optional[np.ndarray] = field(default=None, repr=False)
    prev_v: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def regret(self) -> float:
        return self.learner_loss - self.comparator_loss


def update_metrics(tracker: MetricTracker, t: int, learner_window, comparator_window,
                   oracle: LossOracle, grad: np.ndarray, variation_probe=None,
                   set_: Optional[FeasibleSet] = None) -> MetricTracker:
    """Fold round ``t`` into the tracker (mutated in place and returned).

    ``grad`` is the unary gradient at the current decision. The loss-variation
    increment uses ``oracle.variation_sup`` when it is exact for ``set_`` and
    otherwise the max over ``variation_probe``; nothing is added at the first
    round, which has no predecessor.
    """
    if len(learner_window) != oracle.m + 1 or len(comparator_window) != oracle.m + 1:
        raise ValueError("windows must hold m + 1 points")
    x, v = learner_window[-1], comparator_window[-1]
    tracker.learner_loss += oracle.value_with_memory(t, learner_window)
    tracker.comparator_loss += oracle.value_with_memory(t, comparator_window)

    if tracker.prev_x is not None:
        tracker.switching += norm(x - tracker.prev_x)
        tracker.C_T += norm(v - tracker.prev_v)
        tracker.D_T += norm(grad - tracker.prev_grad) ** 2
        exact = oracle.variation_sup(t, set_) if set_ is not None else None
        if exact is not None:
            tracker.V_T += exact
        elif variation_probe:
            tracker.V_T += max(abs(oracle.unary_value(t, p) - oracle.unary_value(t - 1, p))
                               for p in variation_probe)

    tracker.prev_x = np.array(x, dtype=float)
    tracker.prev_v = np.array(v, dtype=float)
    tracker.prev_grad = np.array(grad, dtype=float)
    return tracker
