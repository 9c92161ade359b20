"""Hedge over a geometric pool of base learners (Meta-OFW) and the OGD-pool
baselines built on the same skeleton."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, List, Optional, Sequence

import numpy as np

from .feasible_sets import FeasibleSet, inner, norm
from .oco import LossOracle, OfwState, OgdState, ofw_step, ogd_step, zero_padded_window

__all__ = [
    "StepPool",
    "HedgeState",
    "MetaOfwState",
    "RoundRecord",
    "geometric_pool",
    "build_step_pool",
    "init_weights",
    "meta_rate",
    "linearized_loss",
    "surrogate_losses",
    "hedge_update",
    "combine",
    "init_meta_state",
    "meta_ofw_round",
    "scream_round",
    "ader_round",
    "run_rounds",
]

# Weights are floored here so they stay strictly positive after underflow.
_WEIGHT_FLOOR = np.finfo(float).tiny


@dataclass(frozen=True)
class StepPool:
    etas: tuple

    def __post_init__(self):
        etas = tuple(float(e) for e in self.etas)
        if not etas:
            raise ValueError("step pool needs at least one step size")
        if any(not 0.0 < e <= 1.0 for e in etas):
            raise ValueError("pool step sizes must lie in (0, 1]")
        if any(b <= a for a, b in zip(etas, etas[1:])):
            raise ValueError("pool step sizes must be strictly increasing")
        object.__setattr__(self, "etas", etas)

    @property
    def N(self) -> int:
        return len(self.etas)


def geometric_pool(n: int, base: float) -> StepPool:
    """``base * 2**(i-1)`` for ``i = 1..n``, clamped at one with duplicates dropped."""
    if n < 1 or base <= 0:
        raise ValueError("need n >= 1 and a positive base step size")
    etas = []
    for i in range(n):
        e = min(1.0, base * 2.0**i)
        if etas and e <= etas[-1]:
            break
        etas.append(e)
    return StepPool(tuple(etas))


def build_step_pool(T: int, a: float, c: float, lam: float, D: float) -> StepPool:
    """Pool sized from the loss range: ``N = ceil(log2(1 + T c / alpha) / 2) + 1``
    with ``alpha = 2 (a + c)`` and smallest step ``sqrt(alpha / (lam T D))``."""
    if T < 1 or c <= 0 or lam <= 0 or D <= 0:
        raise ValueError("build_step_pool needs T >= 1 and positive c, lambda, D")
    if a < 0:
        raise ValueError("a must be nonnegative")
    alpha = 2.0 * (a + c)
    n = math.ceil(0.5 * math.log2(1.0 + T * c / alpha)) + 1
    return geometric_pool(n, math.sqrt(alpha / (lam * T * D)))


def init_weights(N: int) -> np.ndarray:
    """Prior ``p_i = (N + 1) / (N i (i + 1))`` favouring the small step sizes."""
    if N < 1:
        raise ValueError("N must be >= 1")
    # Snap to multiples of 2**-53 and give the remainder to the largest entry:
    # every partial sum is then exactly representable, so the weights sum to
    # one in float arithmetic regardless of summation order.
    scale = 2**53
    ticks = [round(Fraction(N + 1, N * i * (i + 1)) * scale) for i in range(2, N + 1)]
    ticks.insert(0, scale - sum(ticks))
    return np.array([k / scale for k in ticks])


def meta_rate(lam: float, G: float, D: float, T: int) -> float:
    """Hedge learning rate ``sqrt(2 / ((2 lam + G)(lam + G) D^2 T))``."""
    if lam < 0 or G <= 0 or D <= 0 or T < 1:
        raise ValueError("meta_rate needs lam >= 0 and positive G, D, T")
    return math.sqrt(2.0 / ((2.0 * lam + G) * (lam + G) * D**2 * T))


def linearized_loss(grad: np.ndarray, x: np.ndarray) -> float:
    grad, x = np.asarray(grad), np.asarray(x)
    if grad.shape != x.shape:
        raise ValueError(f"shape mismatch: {grad.shape} vs {x.shape}")
    return inner(grad, x)


def surrogate_losses(grad, base_xs, prev_xs, lam: float) -> np.ndarray:
    """Linearized loss of each base decision plus ``lam`` times its movement."""
    if len(base_xs) != len(prev_xs) or len(base_xs) < 1:
        raise ValueError("need matching, nonempty lists of base decisions")
    return np.array([linearized_loss(grad, x) + lam * norm(x - xp)
                     for x, xp in zip(base_xs, prev_xs)])


def _check_simplex(p: np.ndarray, tol: float = 1e-9):
    if np.any(p < -tol) or abs(p.sum() - 1.0) > tol:
        raise ValueError("weights are off the probability simplex")


def hedge_update(p: np.ndarray, losses: np.ndarray, epsilon: float) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    losses = np.asarray(losses, dtype=float)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if losses.shape != p.shape:
        raise ValueError("losses and weights differ in length")
    if not np.all(np.isfinite(losses)):
        raise ValueError("non-finite surrogate loss")
    _check_simplex(p)
    w = p * np.exp(-epsilon * (losses - losses.min()))
    w /= w.sum()
    if np.any(w < _WEIGHT_FLOOR):
        w = np.maximum(w, _WEIGHT_FLOOR)
        w /= w.sum()
    return w


def combine(p: np.ndarray, base_xs) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    xs = np.asarray(base_xs, dtype=float)
    if xs.shape[0] != p.shape[0]:
        raise ValueError("one weight per base decision required")
    return np.tensordot(p, xs, axes=1)


@dataclass(frozen=True)
class HedgeState:
    p: np.ndarray
    epsilon: float

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        _check_simplex(np.asarray(self.p))


@dataclass(frozen=True)
class RoundRecord:
    """What a round saw, kept for invariant checks."""

    t: int
    p: np.ndarray
    base_xs: List[np.ndarray]
    decision: np.ndarray
    grad: np.ndarray
    losses: np.ndarray
    incurred: float


@dataclass(frozen=True)
class MetaOfwState:
    pool: StepPool
    bases: tuple
    hedge: HedgeState
    lam: float
    prev_xs: Optional[tuple] = None
    x: Optional[np.ndarray] = None
    history: tuple = ()
    last: Optional[RoundRecord] = field(default=None, repr=False)

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if len(self.bases) != self.pool.N or len(self.hedge.p) != self.pool.N:
            raise ValueError("pool, bases and weights disagree on N")


def init_meta_state(set_: FeasibleSet, pool: StepPool, epsilon: float, lam: float,
                    base: str = "ofw", ogd_etas: Optional[Sequence[float]] = None) -> MetaOfwState:
    """Fresh state: every base learner at the set's initial point, prior weights."""
    x0 = set_.initial_point()
    if base == "ofw":
        bases = tuple(OfwState(x0.copy(), e) for e in pool.etas)
    elif base == "ogd":
        etas = pool.etas if ogd_etas is None else tuple(ogd_etas)
        bases = tuple(OgdState(x0.copy(), e) for e in etas)
    else:
        raise ValueError(f"unknown base learner {base!r}")
    return MetaOfwState(pool, bases, HedgeState(init_weights(pool.N), epsilon), lam)


def _pool_round(state: MetaOfwState, set_: FeasibleSet, oracle: LossOracle, t: int,
                memory, step: Callable, lam: float):
    xs = [b.x for b in state.bases]
    prev = list(state.prev_xs) if state.prev_xs is not None else xs
    p = state.hedge.p
    x = combine(p, xs)
    past = state.history if memory is None else memory
    window = zero_padded_window(past, x, oracle.m)
    incurred = oracle.value_with_memory(t, window)
    grad = oracle.unary_gradient(t, x)
    losses = surrogate_losses(grad, xs, prev, lam)
    p_next = hedge_update(p, losses, state.hedge.epsilon)
    bases = tuple(step(b, set_, grad) for b in state.bases)
    history = (tuple(past) + (x,))[-oracle.m:] if oracle.m > 0 else ()
    record = RoundRecord(t, p, xs, x, grad, losses, incurred)
    new = replace(state, bases=bases, hedge=replace(state.hedge, p=p_next),
                  prev_xs=tuple(xs), x=x, history=history, last=record)
    return x, new, incurred


def meta_ofw_round(state, set_, oracle, t, memory_window=None):
    """One round of Meta-OFW.

    ``memory_window`` holds the previous combined decisions (oldest first); by
    default the state's own history is used. Returns ``(x_t, new_state, loss)``.
    """
    return _pool_round(state, set_, oracle, t, memory_window, ofw_step, state.lam)


def scream_round(state, set_, oracle, t, memory_window=None):
    """Scream-style round: projected OGD base learners, switching-regularized Hedge."""
    return _pool_round(state, set_, oracle, t, memory_window, ogd_step, state.lam)


def ader_round(state, set_, oracle, t, memory_window=None):
    """Ader-style round: projected OGD base learners, no switching regularization."""
    return _pool_round(state, set_, oracle, t, memory_window, ogd_step, 0.0)


_ROUNDS = {"meta_ofw": meta_ofw_round, "scream": scream_round, "ader": ader_round}


def run_rounds(state: MetaOfwState, set_: FeasibleSet, oracle: LossOracle, T: int,
               kind: str = "meta_ofw", keep_records: bool = False):
    """Drive ``T`` rounds (``t = 1..T``); returns final state, decisions, losses, records."""
    round_fn = _ROUNDS[kind]
    decisions, losses, records = [], [], []
    for t in range(1, T + 1):
        x, state, loss = round_fn(state, set_, oracle, t)
        decisions.append(x)
        losses.append(loss)
        if keep_records:
            records.append(state.last)
    return state, decisions, np.array(losses), records
