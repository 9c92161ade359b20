"""Closed-loop online controllers over DAC parameters: Meta-OFW, the OGD-pool
baselines and single-learner OGD / OFW."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from ..feasible_sets import BlockOpNormBall, norm
from ..meta import StepPool, combine, hedge_update, init_weights, surrogate_losses
from ..oco import OfwState, OgdState, ofw_step, ogd_step
from .constants import ControlConstants, control_constants, control_meta_rate, control_step_pool
from .costs import QuadraticCost
from .dac import TruncatedLossMaps, dac_action, past_noises
from .system import LtvSystem, ltv_step, recover_noise, stability_margins, strong_stability_check

__all__ = [
    "KINDS",
    "ControllerError",
    "ControlRun",
    "constants_for",
    "run_controller",
    "dac_comparator_from_gains",
    "simulate_dac",
    "simulate_linear_policy",
]

KINDS = ("meta_ofw", "scream", "ader", "ogd", "ofw")

NoiseSource = Union[None, np.ndarray, Callable[[int, np.ndarray, np.ndarray], np.ndarray]]


class ControllerError(RuntimeError):
    def __init__(self, t: int, cause: Exception):
        super().__init__(f"round {t}: {cause}")
        self.t = t


@dataclass
class ControlRun:
    kind: str
    states: np.ndarray          # (T + 1, d_x)
    actions: np.ndarray         # (T + 1, d_u)
    noises: np.ndarray          # (T, d_x), recovered from the observed states
    Ms: np.ndarray              # (T + 1, H, d_u, d_x), combined parameters
    losses: np.ndarray          # (T + 1,)
    truncated: np.ndarray       # (T + 1,), truncated loss on the parameter window
    step_seconds: np.ndarray    # (T + 1,), learner-side time per step
    weights: np.ndarray         # (T + 1, N)
    wall_seconds: float
    pool: StepPool
    epsilon: float
    constants: ControlConstants
    metrics: dict = field(default_factory=dict)

    @property
    def cum_loss(self) -> float:
        return float(self.losses.sum())


def _distinct_times(stack: np.ndarray):
    return [0] if stack.strides[0] == 0 else range(stack.shape[0])


def constants_for(sys: LtvSystem, cost: QuadraticCost, gains: np.ndarray, H: int,
                  kappa: Optional[float] = None, gamma: Optional[float] = None) -> ControlConstants:
    """Constants with ``(kappa, gamma)`` certified from the gains when not given."""
    if kappa is None or gamma is None:
        ks, gs = [], []
        for t in sorted(set(_distinct_times(gains)) | set(_distinct_times(sys.A))):
            k, g = stability_margins(sys.A[t], sys.B[t], gains[t])
            ks.append(k)
            gs.append(g)
        kappa = max(max(ks), 1.0) if kappa is None else kappa
        gamma = min(gs) if gamma is None else gamma
    if gamma <= 0:
        raise ValueError(f"gains are not stabilizing (gamma = {gamma:.4g})")
    return control_constants(kappa, gamma, sys.kappa_B, H, sys.d_u, sys.d_x, sys.W,
                             cost.G_c, cost.beta)


def _noise_fn(noise: NoiseSource, d_x: int):
    if noise is None:
        return lambda t, x, u: np.zeros(d_x)
    if callable(noise):
        return noise
    arr = np.asarray(noise, dtype=float)
    return lambda t, x, u: arr[t]


def run_controller(kind: str, sys: LtvSystem, cost: QuadraticCost, gains: np.ndarray, H: int,
                   T: Optional[int] = None, noise: NoiseSource = None,
                   constants: Optional[ControlConstants] = None, pool: Optional[StepPool] = None,
                   epsilon: Optional[float] = None, eta: Optional[float] = None,
                   gains_star: Optional[np.ndarray] = None, probes: bool = True,
                   x0: Optional[np.ndarray] = None) -> ControlRun:
    """Run one closed loop for ``t = 0..T``.

    ``noise`` is a fixed ``(T, d_x)`` array or a callable ``(t, x_t, u_t) -> w_t``
    (the learner never sees it; it recovers ``w_t`` from ``x_{t+1}``).
    ``pool`` / ``epsilon`` override the constants-derived step pool and meta
    rate; ``eta`` sets the step of the single learners (``ogd``, ``ofw``).
    """
    if kind not in KINDS:
        raise ValueError(f"unknown controller {kind!r}; expected one of {KINDS}")
    T = sys.T if T is None else T
    if not 1 <= T <= sys.T or len(gains) < T + 1 or len(cost.q) < T + 1:
        raise ValueError("horizon exceeds the plant, gain or cost series")
    if H < 1:
        raise ValueError("H must be >= 1")
    dx, du = sys.d_x, sys.d_u
    cc = constants_for(sys, cost, gains, H) if constants is None else constants
    for t in _distinct_times(gains):
        ok, _ = strong_stability_check(sys.A[t], sys.B[t], gains[t], cc.kappa, cc.gamma)
        if not ok:
            raise ValueError(f"gain K_{t} is not ({cc.kappa:.4g}, {cc.gamma:.4g})-strongly stable")
    set_ = BlockOpNormBall.for_control(H, du, dx, cc.kappa, cc.gamma, cc.kappa_B)

    if kind in ("meta_ofw", "scream", "ader"):
        pool = control_step_pool(T, cc) if pool is None else pool
        epsilon = control_meta_rate(cc, T) if epsilon is None else epsilon
        lam = 0.0 if kind == "ader" else cc.zeta
    else:
        if eta is None:
            eta = cc.D_f / (cc.G_f * math.sqrt(T)) if kind == "ogd" else min(1.0, 1.0 / math.sqrt(T))
        pool = StepPool((min(eta, 1.0),)) if kind == "ofw" else StepPool((1.0,))
        epsilon = 1.0 if epsilon is None else epsilon
        lam = 0.0
    M0 = set_.initial_point()
    if kind in ("meta_ofw", "ofw"):
        bases = [OfwState(M0.copy(), e) for e in pool.etas]
        step = ofw_step
    else:
        etas = (eta,) if kind == "ogd" else pool.etas
        bases = [OgdState(M0.copy(), e) for e in etas]
        step = ogd_step
    p = init_weights(len(bases))
    noise_fn = _noise_fn(noise, dx)
    x = np.zeros(dx) if x0 is None else np.asarray(x0, dtype=float)

    states = np.zeros((T + 1, dx))
    actions = np.zeros((T + 1, du))
    noises = np.zeros((T, dx))
    Ms = np.zeros((T + 1,) + set_.shape)
    losses = np.zeros(T + 1)
    truncated = np.zeros(T + 1)
    step_seconds = np.zeros(T + 1)
    weights = np.zeros((T + 1, len(bases)))
    probe = np.array(set_.probe_points()) if probes else None
    V_T = D_T = switching = 0.0
    prev_vals = prev_grad = None
    prev_xs = None

    wall0 = time.perf_counter()
    for t in range(T + 1):
        try:
            s0 = time.perf_counter()
            xs = [b.x for b in bases]
            M = combine(p, xs) if len(xs) > 1 else xs[0]
            u = dac_action(gains[t], M, x, past_noises(noises, t, H, dx))
            s1 = time.perf_counter()
            losses[t] = cost.value(t, x, u)
            s2 = time.perf_counter()
            maps = TruncatedLossMaps(sys, gains, noises, t, H)
            grad = maps.unary_gradient(cost, M)
            if len(bases) > 1:
                ell = surrogate_losses(grad, xs, xs if prev_xs is None else prev_xs, lam)
                p_next = hedge_update(p, ell, epsilon)
            else:
                p_next = p
            bases = [step(b, set_, grad) for b in bases]
            s3 = time.perf_counter()
            step_seconds[t] = (s1 - s0) + (s3 - s2)

            states[t], actions[t], Ms[t], weights[t] = x, u, M, p
            window = Ms[max(t - H - 1, 0): t + 1]
            if len(window) < H + 2:
                window = np.concatenate([np.zeros((H + 2 - len(window),) + set_.shape), window])
            y = maps.y_window(window)
            truncated[t] = cost.value(t, y, maps.v_from(M, y))
            if t > 0:
                switching += norm(M - Ms[t - 1])
                D_T += norm(grad - prev_grad) ** 2
            if probe is not None:
                vals = maps.unary_values(cost, probe)
                if prev_vals is not None:
                    V_T += float(np.max(np.abs(vals - prev_vals)))
                prev_vals = vals
            prev_grad, prev_xs, p = grad, xs, p_next

            if t < T:
                w = noise_fn(t, x, u)
                x_next = ltv_step(sys, t, x, u, w)
                noises[t] = recover_noise(sys, t, x, u, x_next)
                x = x_next
        except Exception as exc:  # abort with the failing round
            raise ControllerError(t, exc) from exc
    wall = time.perf_counter() - wall0

    run = ControlRun(kind, states, actions, noises, Ms, losses, truncated, step_seconds,
                     weights, wall, pool, float(epsilon), cc)
    if gains_star is not None:
        M_star = dac_comparator_from_gains(sys, gains, gains_star, H, T=T)
    else:
        M_star = np.zeros_like(Ms)
    comp = simulate_dac(sys, cost, gains, M_star, noises, T)
    C_T = float(sum(norm(M_star[t] - M_star[t - 1]) for t in range(1, T + 1)))
    run.metrics = dict(V_T=V_T, D_T=D_T, C_T=C_T, switching=switching,
                       comparator_loss=float(comp[2].sum()),
                       regret=run.cum_loss - float(comp[2].sum()))
    return run


def dac_comparator_from_gains(sys: LtvSystem, gains, gains_star, H: int, T: Optional[int] = None,
                              kappa: Optional[float] = None, gamma: Optional[float] = None):
    """DAC parameters reproducing the linear policy ``K*`` up to truncation:
    block ``i`` at time ``t`` is ``(K_t - K*_t)`` times the last ``i`` closed
    loops of ``K*`` ending at ``t - 1``.

    With ``kappa`` and ``gamma`` the gains ``K*`` are checked for strong
    stability and every block against ``2 kappa^3 (1 - gamma)^i``.
    """
    T = sys.T if T is None else T
    gs = np.asarray(gains_star, dtype=float)
    if kappa is not None and gamma is not None:
        for t in _distinct_times(gs):
            ok, _ = strong_stability_check(sys.A[t], sys.B[t], gs[t], kappa, gamma)
            if not ok:
                raise ValueError(f"K*_{t} is not ({kappa:.4g}, {gamma:.4g})-strongly stable")
    out = np.zeros((T + 1, H, sys.d_u, sys.d_x))
    for t in range(T + 1):
        diff = gains[t] - gs[t]
        prod = np.eye(sys.d_x)
        for i in range(H):
            out[t, i] = diff @ prod
            prod = prod @ (sys.A[max(t - 1 - i, 0)] - sys.B[max(t - 1 - i, 0)] @ gs[max(t - 1 - i, 0)])
    if kappa is not None and gamma is not None:
        radii = 2.0 * kappa**3 * (1.0 - gamma) ** np.arange(H)
        worst = np.linalg.norm(out, ord=2, axis=(2, 3)) - radii
        if np.max(worst) > 1e-9:
            raise ValueError("comparator block exceeds its 2 kappa^3 (1 - gamma)^i bound")
    return out


def simulate_dac(sys: LtvSystem, cost: QuadraticCost, gains, Ms, noises, T: int, x0=None):
    """Open-loop replay of a DAC parameter sequence against fixed noises.

    Returns ``(states, actions, losses)`` for ``t = 0..T``.
    """
    H = Ms.shape[1]
    x = np.zeros(sys.d_x) if x0 is None else np.asarray(x0, dtype=float)
    X, U, c = np.zeros((T + 1, sys.d_x)), np.zeros((T + 1, sys.d_u)), np.zeros(T + 1)
    for t in range(T + 1):
        u = dac_action(gains[t], Ms[t], x, past_noises(noises, t, H, sys.d_x))
        X[t], U[t], c[t] = x, u, cost.value(t, x, u)
        if t < T:
            x = sys.A[t] @ x + sys.B[t] @ u + noises[t]
    return X, U, c


def simulate_linear_policy(sys: LtvSystem, cost: QuadraticCost, gains, noises, T: int, x0=None):
    """Replay ``u_t = -K_t x_t`` against fixed noises; ``(states, actions, losses)``."""
    x = np.zeros(sys.d_x) if x0 is None else np.asarray(x0, dtype=float)
    X, U, c = np.zeros((T + 1, sys.d_x)), np.zeros((T + 1, sys.d_u)), np.zeros(T + 1)
    for t in range(T + 1):
        u = -gains[t] @ x
        X[t], U[t], c[t] = x, u, cost.value(t, x, u)
        if t < T:
            x = sys.A[t] @ x + sys.B[t] @ u + noises[t]
    return X, U, c
