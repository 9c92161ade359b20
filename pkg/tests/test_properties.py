"""Randomized invariants, driven by hypothesis."""

import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from metaofw.bench.noise import NoiseProcess, NoiseSpec, DISTRIBUTIONS
from metaofw.bench.schedules import WeightSchedule, weights_at
from metaofw.control import (LtvSystem, control_constants, state_via_psi, surrogate_state_y,
                             truncated_loss)
from metaofw.feasible_sets import BlockOpNormBall, Box, Simplex, inner
from metaofw.meta import combine, hedge_update, init_weights
from metaofw.oco import OfwState, ofw_step

from conftest import simulate_recursive

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
SETTINGS = settings(max_examples=60, deadline=None,
                    suppress_health_check=[HealthCheck.too_slow])


def vec(n):
    return arrays(np.float64, n, elements=finite)


@SETTINGS
@given(st.integers(1, 6).flatmap(lambda d: st.tuples(vec(d), vec(d), vec(d))))
def test_box_lmo_is_optimal_vertex(data):
    g, lo, span = data
    box = Box(-np.abs(lo) - 0.1, np.abs(span) + 0.1)
    best = min(inner(g, v) for v in box.vertices())
    assert inner(g, box.lmo(g)) == best


@SETTINGS
@given(st.integers(1, 6).flatmap(vec))
def test_simplex_lmo_is_optimal_vertex(g):
    s = Simplex(len(g))
    assert inner(g, s.lmo(g)) == min(inner(g, v) for v in s.vertices())


@SETTINGS
@given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_block_ball_lmo_and_projection(H, du, dx, seed):
    rng = np.random.default_rng(seed)
    ball = BlockOpNormBall(H, du, dx, rng.uniform(0.1, 2.0, H))
    g = rng.standard_normal(ball.shape) * rng.uniform(0.01, 100)
    v = ball.lmo(g)
    nuc = np.linalg.norm(g, ord="nuc", axis=(1, 2))
    assert ball.contains(v, 1e-9)
    assert math.isclose(inner(g, v), -float(ball.radii @ nuc), rel_tol=1e-8)
    x = rng.standard_normal(ball.shape) * 3
    p = ball.project(x)
    assert ball.contains(p, 1e-9)
    assert np.allclose(ball.project(p), p, atol=1e-12)


@SETTINGS
@given(st.integers(1, 12).flatmap(lambda n: st.lists(vec(n), min_size=1, max_size=30)),
       st.floats(1e-4, 10.0))
def test_hedge_stays_on_simplex(losses, eps):
    p = init_weights(len(losses[0]))
    for ell in losses:
        p = hedge_update(p, ell, eps)
        assert abs(p.sum() - 1.0) <= 1e-12 and np.all(p > 0)


@settings(max_examples=64, deadline=None)
@given(st.integers(1, 64))
def test_init_weights_exact(N):
    p = init_weights(N)
    assert math.fsum(p) == 1.0 and np.all(p > 0)
    assert np.all(np.diff(p[1:]) <= 0)


@SETTINGS
@given(st.integers(1, 4), st.integers(0, 2**32 - 1), st.floats(1e-6, 1.0))
def test_ofw_combination_stays_feasible(d, seed, eta):
    rng = np.random.default_rng(seed)
    box = Box(-np.ones(d), np.ones(d))
    sts = [OfwState(box.sample(rng), eta) for _ in range(3)]
    for _ in range(5):
        g = rng.standard_normal(d)
        sts = [ofw_step(s, box, g) for s in sts]
        assert all(box.contains(s.x, 1e-12) for s in sts)
    p = hedge_update(init_weights(3), rng.standard_normal(3), 1.0)
    assert box.contains(combine(p, [s.x for s in sts]), 1e-12)


@SETTINGS
@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 5), st.integers(1, 25),
       st.integers(0, 2**32 - 1))
def test_psi_matches_recursion(dx, du, H, T, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((T + 1, dx, dx)) * 0.3
    B = rng.standard_normal((T + 1, dx, du)) * 0.3
    sys = LtvSystem(A, B, np.linalg.norm(A, 2, axis=(1, 2)).max(),
                    np.linalg.norm(B, 2, axis=(1, 2)).max(), 1.0)
    gains = rng.standard_normal((T + 1, du, dx)) * 0.3
    Ms = rng.standard_normal((T + 1, H, du, dx)) * 0.3
    w = rng.standard_normal((T, dx))
    xs = simulate_recursive(sys, gains, Ms, w, T)
    for t in range(T):
        assert np.linalg.norm(state_via_psi(sys, gains, Ms, w, t, t) - xs[t + 1]) <= 1e-10


@SETTINGS
@given(st.integers(1, 3), st.integers(0, 2**32 - 1), st.floats(-3, 3))
def test_surrogate_is_affine(H, seed, alpha):
    rng = np.random.default_rng(seed)
    T, dx, du = 10, 2, 2
    sys = LtvSystem.time_invariant(rng.standard_normal((dx, dx)) * 0.3,
                                   rng.standard_normal((dx, du)) * 0.3, T, 1.0)
    gains = rng.standard_normal((T + 1, du, dx)) * 0.3
    w = rng.standard_normal((T, dx))
    M1, M2 = rng.standard_normal((2, H + 2, H, du, dx))
    lhs = surrogate_state_y(sys, gains, alpha * M1 + (1 - alpha) * M2, w, T)
    rhs = (alpha * surrogate_state_y(sys, gains, M1, w, T)
           + (1 - alpha) * surrogate_state_y(sys, gains, M2, w, T))
    assert np.allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(rhs).max()))


@SETTINGS
@given(st.floats(1.0, 3.0), st.floats(0.01, 1.0), st.floats(0.1, 3.0), st.integers(1, 10),
       st.integers(1, 8), st.integers(1, 8), st.floats(0.1, 5.0), st.floats(0.0, 5.0),
       st.floats(0.0, 5.0))
def test_constants_positive_when_contractive(kappa, gamma, kB, H, du, dx, W, Gc, beta):
    if kappa**2 * (1 - gamma) ** (H + 1) >= 1:
        return
    cc = control_constants(kappa, gamma, kB, H, du, dx, W, Gc, beta)
    assert cc.D_bar > 0 and math.isfinite(cc.D_bar)
    assert cc.D_f > 0 and cc.G_f >= 0 and cc.L_f >= 0
    assert cc.zeta == (H + 2) ** 2 * cc.L_f
    assert math.isclose(cc.phi, cc.sigma + 2 * beta * cc.D_bar**2)
    assert math.isclose(cc.theta, 2 * cc.sigma)


@SETTINGS
@given(st.sampled_from(DISTRIBUTIONS), st.floats(0.05, 3.0), st.integers(0, 2**32 - 1))
def test_noise_never_exceeds_W(dist, W, seed):
    proc = NoiseProcess(NoiseSpec(dist, W=W, delta_A=0.5, delta_B=0.5), 3, 2, seed)
    rng = np.random.default_rng(seed)
    for t in range(20):
        w = proc(t, rng.standard_normal(3) * 10, rng.standard_normal(2) * 10)
        assert np.linalg.norm(w) <= W * (1 + 1e-12)


@SETTINGS
@given(st.integers(1, 10**6).flatmap(lambda T: st.tuples(st.just(T), st.integers(0, T))))
def test_step_schedule_segments(Tt):
    T, t = Tt
    q, r = weights_at(WeightSchedule("step"), t, T)
    k = next(k for k in range(5) if t <= (k + 1) * T / 5)
    half = math.log(2) / 2
    table = [(half, 1.0), (1.0, 1.0), (half, half), (1.0, half), (half, 1.0)]
    assert (q, r) == table[k]


@SETTINGS
@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_zero_noise_truncated_loss_is_zero(H, seed):
    rng = np.random.default_rng(seed)
    from metaofw.control import QuadraticCost
    T = 8
    sys = LtvSystem.time_invariant(rng.standard_normal((2, 2)) * 0.3,
                                   rng.standard_normal((2, 1)) * 0.3, T, 1.0)
    gains = rng.standard_normal((T + 1, 1, 2)) * 0.3
    window = rng.standard_normal((H + 2, H, 1, 2))
    cost = QuadraticCost(rng.uniform(0, 1, T + 1), rng.uniform(0, 1, T + 1))
    assert truncated_loss(cost, sys, gains, window, np.zeros((T, 2)), T) == 0.0
