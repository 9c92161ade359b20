"""Quick built-in invariant suite behind ``metaofw check``."""

from __future__ import annotations

import itertools
import time

import numpy as np

from ..control.constants import control_constants
from ..control.controller import run_controller
from ..control.costs import QuadraticCost
from ..control.dac import state_via_psi, unary_truncated_gradient, unary_truncated_value
from ..control.system import LtvSystem, ltv_step
from ..feasible_sets import BlockOpNormBall, Box, Simplex, inner
from ..meta import build_step_pool, hedge_update, init_meta_state, init_weights, meta_rate, run_rounds
from ..oco import QuadraticMemoryLoss
from .noise import NoiseProcess, NoiseSpec

__all__ = ["run_checks"]


def _lmo_brute_force(rng):
    for d in range(1, 5):
        box = Box(-rng.uniform(0.5, 1, d), rng.uniform(0.5, 1, d))
        simplex = Simplex(d)
        for _ in range(100):
            g = rng.standard_normal(d)
            for s in (box, simplex):
                best = min(inner(g, v) for v in s.vertices())
                if inner(g, s.lmo(g)) > best:
                    return False, f"{type(s).__name__} d={d}"
    ball = BlockOpNormBall(2, 2, 3, np.array([1.0, 0.5]))
    g = rng.standard_normal(ball.shape)
    nuc = np.linalg.norm(g, ord="nuc", axis=(1, 2))
    ok = np.isclose(inner(g, ball.lmo(g)), -float(ball.radii @ nuc), rtol=1e-8)
    return bool(ok), "block ball value"


def _random_system(rng, T, dx=3, du=2):
    A = rng.standard_normal((T + 1, dx, dx)) * 0.3
    B = rng.standard_normal((T + 1, dx, du)) * 0.3
    kA = float(np.linalg.norm(A, 2, axis=(1, 2)).max())
    kB = float(np.linalg.norm(B, 2, axis=(1, 2)).max())
    return LtvSystem(A, B, kA, kB, 1.0)


def _psi_oracle(rng):
    T, H = 15, 2
    for _ in range(3):
        sys = _random_system(rng, T)
        gains = rng.standard_normal((T + 1, 2, 3)) * 0.3
        Ms = rng.standard_normal((T + 1, H, 2, 3)) * 0.3
        w = rng.standard_normal((T, 3))
        x = np.zeros(3)
        for t in range(T):
            past = np.array([w[t - 1 - k] if t - 1 - k >= 0 else np.zeros(3) for k in range(H)])
            u = -gains[t] @ x + np.einsum("kpq,kq->p", Ms[t], past)
            x = ltv_step(sys, t, x, u, w[t])
            err = np.linalg.norm(x - state_via_psi(sys, gains, Ms, w, t, t))
            if err > 1e-10:
                return False, f"error {err:.2e} at t={t}"
    return True, "3 systems"


def _gradient_fd(rng):
    T, H, h = 6, 2, 1e-5
    worst = 0.0
    for _ in range(5):
        sys = _random_system(rng, T)
        gains = rng.standard_normal((T + 1, 2, 3)) * 0.3
        cost = QuadraticCost(rng.uniform(0.5, 1, T + 1), rng.uniform(0.5, 1, T + 1))
        w = rng.standard_normal((T, 3))
        M = rng.standard_normal((H, 2, 3)) * 0.3
        g = unary_truncated_gradient(cost, sys, gains, w, T, M)
        fd = np.zeros_like(M)
        for idx in itertools.product(*map(range, M.shape)):
            E = np.zeros_like(M)
            E[idx] = h
            fd[idx] = (unary_truncated_value(cost, sys, gains, w, T, M + E)
                       - unary_truncated_value(cost, sys, gains, w, T, M - E)) / (2 * h)
        worst = max(worst, np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-12))
    return worst <= 1e-6, f"max relative error {worst:.2e}"


def _hedge_simplex(rng):
    assert all(abs(init_weights(N).sum() - 1.0) <= 1e-12 for N in range(1, 65))
    p = init_weights(8)
    for _ in range(1000):
        p = hedge_update(p, rng.standard_normal(8) * 10, 0.5)
        if abs(p.sum() - 1.0) > 1e-12 or np.any(p <= 0):
            return False, "weights left the simplex"
    return True, "1000 rounds"


def _switching_decomposition(rng):
    box = Box(-np.ones(3), np.ones(3))
    oracle = QuadraticMemoryLoss(box, rng.uniform(-0.5, 0.5, (51, 3)), m=2)
    lam = oracle.m**2 * oracle.L
    pool = build_step_pool(50, oracle.a, oracle.c, lam, box.diameter())
    state = init_meta_state(box, pool, meta_rate(lam, oracle.G, box.diameter(), 50), lam)
    _, xs, _, recs = run_rounds(state, box, oracle, 50, keep_records=True)
    D = box.diameter()
    for a, b in zip(recs, recs[1:]):
        lhs = np.linalg.norm(b.decision - a.decision)
        rhs = D * np.abs(b.p - a.p).sum() + sum(
            pi * np.linalg.norm(x1 - x0) for pi, x1, x0 in zip(b.p, b.base_xs, a.base_xs))
        if lhs > rhs + 1e-9:
            return False, f"violated at t={b.t}"
    return True, "50 rounds"


def _noise_bound(rng):
    spec = NoiseSpec("gamma", W=0.5)
    T = 100
    A = 0.9 * np.eye(2)
    B = np.array([[1.0], [0.0]])
    sys = LtvSystem.time_invariant(A, B, T, spec.W)
    gains = np.zeros((T + 1, 1, 2))
    cost = QuadraticCost.constant(1.0, 1.0, T)
    cc = control_constants(1.0, 0.1, 1.0, 2, 1, 2, spec.W, cost.G_c, cost.beta)
    noise = NoiseProcess(spec, 2, 1, seed=int(rng.integers(1 << 31)))
    run = run_controller("meta_ofw", sys, cost, gains, 2, noise=noise, constants=cc)
    worst = float(np.linalg.norm(run.noises, axis=1).max())
    return worst <= spec.W + 1e-12, f"max |w| = {worst:.4f}, clip rate {noise.clip_rate:.2f}"


CHECKS = (
    ("lmo brute force", _lmo_brute_force),
    ("transfer-matrix state oracle", _psi_oracle),
    ("truncated-loss gradient vs finite differences", _gradient_fd),
    ("hedge weights on the simplex", _hedge_simplex),
    ("switching-cost decomposition", _switching_decomposition),
    ("noise respects W", _noise_bound),
)


def run_checks(seed: int = 0, out=print) -> bool:
    rng = np.random.default_rng(seed)
    all_ok = True
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = fn(rng)
        except Exception as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= ok
        out(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail}; {time.perf_counter() - t0:.2f}s)")
    return all_ok
