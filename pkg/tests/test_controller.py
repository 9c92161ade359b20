import numpy as np
import pytest

from metaofw.control import (ControllerError, LtvSystem, QuadraticCost, TruncatedLossMaps,
                             constants_for, dac_action, dac_comparator_from_gains,
                             run_controller, simulate_dac, simulate_linear_policy,
                             stability_margins)
from metaofw.control.dac import past_noises
from metaofw.feasible_sets import BlockOpNormBall
from metaofw.meta import StepPool
from metaofw.oco import OfwState, ofw_step

from conftest import ball_noise, normal_plant, positive_cost


def plant(rng, dx=3, du=2, rho=0.8, T=40, W=1.0):
    A, B = normal_plant(rng, dx, du, rho)
    sys = LtvSystem.time_invariant(A, B, T, W, kappa_B=1.0)
    return sys, np.zeros((T + 1, du, dx))


def scalar_loop(T=2, W=2.0):
    sys = LtvSystem.time_invariant(np.array([[0.5]]), np.array([[1.0]]), T, W)
    return sys, np.full((T + 1, 1, 1), 0.5), QuadraticCost.constant(1.0, 1.0, T)


def test_zero_noise_stays_at_origin(rng):
    A, B = normal_plant(rng, 3, 2, 0.6)
    T = 20
    sys = LtvSystem.time_invariant(A, B, T, 1.0, kappa_B=1.0)
    K = rng.standard_normal((2, 3)) * 0.05
    gains = np.broadcast_to(K, (T + 1, 2, 3))
    run = run_controller("meta_ofw", sys, positive_cost(rng, T), gains, 2)
    assert not np.any(run.states) and not np.any(run.actions)
    assert np.allclose(run.actions, -run.states @ K.T)


def test_two_round_scalar_trace():
    sys, gains, cost = scalar_loop()
    run = run_controller("meta_ofw", sys, cost, gains, 1, noise=np.array([[1.0], [2.0]]),
                         pool=StepPool((0.5,)))
    # Closed loop A - BK = 0, so x_2 = B u_1 + A x_1 + w_1 with u_1 = -0.5.
    assert np.allclose(run.states[:, 0], [0.0, 1.0, 2.0])
    assert np.allclose(run.actions[:, 0], [0.0, -0.5, 0.0])
    assert np.allclose(run.losses, [0.0, 1.25, 4.0])
    # Gradient at t = 1 is 2 v w_0 = -1, the LMO answers +1 and M_2 = 0.5.
    assert np.allclose(run.Ms[:, 0, 0, 0], [0.0, 0.0, 0.5])
    assert np.allclose(run.truncated, run.losses)
    assert np.allclose(run.noises[:, 0], [1.0, 2.0])


def independent_ofw(sys, cost, gains, H, T, noise, eta, cc):
    ball = BlockOpNormBall.for_control(H, sys.d_u, sys.d_x, cc.kappa, cc.gamma, cc.kappa_B)
    st = OfwState(ball.initial_point(), eta)
    x, ws, xs = np.zeros(sys.d_x), np.zeros((T, sys.d_x)), []
    for t in range(T + 1):
        u = dac_action(gains[t], st.x, x, past_noises(ws, t, H, sys.d_x))
        xs.append(x)
        g = TruncatedLossMaps(sys, gains, ws, t, H).unary_gradient(cost, st.x)
        st = ofw_step(st, ball, g)
        if t < T:
            ws[t] = noise[t]
            x = sys.A[t] @ x + sys.B[t] @ u + noise[t]
    return np.array(xs)


def test_single_member_pool_equals_plain_ofw(rng):
    T, H = 30, 2
    sys, gains = plant(rng, T=T)
    cost = positive_cost(rng, T)
    w = ball_noise(rng, T, 3, 1.0)
    cc = constants_for(sys, cost, gains, H)
    meta = run_controller("meta_ofw", sys, cost, gains, H, noise=w, pool=StepPool((0.3,)))
    single = run_controller("ofw", sys, cost, gains, H, noise=w, eta=0.3)
    assert np.allclose(meta.states, single.states, atol=1e-12)
    assert np.allclose(meta.Ms, single.Ms, atol=1e-12)
    ref = independent_ofw(sys, cost, gains, H, T, w, 0.3, cc)
    assert np.allclose(meta.states, ref, atol=1e-12)


@pytest.mark.parametrize("kind", ["meta_ofw", "scream", "ader", "ogd", "ofw"])
def test_feasibility_and_boundedness(rng, kind):
    T, H = 60, 3
    sys, gains = plant(rng, T=T)
    cost = positive_cost(rng, T)
    w = ball_noise(rng, T, 3, 1.0)
    run = run_controller(kind, sys, cost, gains, H, noise=w)
    cc = run.constants
    ball = BlockOpNormBall.for_control(H, 2, 3, cc.kappa, cc.gamma, cc.kappa_B)
    assert all(ball.contains(M, 1e-9) for M in run.Ms)
    assert np.linalg.norm(run.states, axis=1).max() <= cc.D_bar + 1e-6
    assert np.linalg.norm(run.actions, axis=1).max() <= cc.D_bar + 1e-6
    assert np.allclose(run.weights.sum(axis=1), 1.0)
    assert len(run.losses) == len(run.step_seconds) == T + 1
    assert run.wall_seconds >= run.step_seconds.sum()
    assert np.all(np.isfinite(list(run.metrics.values())))


def test_truncation_bound_along_runs(rng):
    for H in (3, 5):
        T = 80
        sys, gains = plant(rng, rho=0.6, T=T)
        cost = positive_cost(rng, T)
        run = run_controller("meta_ofw", sys, cost, gains, H, noise=ball_noise(rng, T, 3, 1.0))
        bound = run.constants.truncation_bound()
        assert np.max(np.abs(run.losses - run.truncated)) <= bound + 1e-8


def test_regret_against_zero_comparator(rng):
    T, H = 30, 2
    sys, gains = plant(rng, T=T)
    cost = positive_cost(rng, T)
    run = run_controller("scream", sys, cost, gains, H, noise=ball_noise(rng, T, 3, 1.0))
    base = simulate_linear_policy(sys, cost, gains, run.noises, T)[2].sum()
    assert run.metrics["comparator_loss"] == pytest.approx(base)
    assert run.metrics["regret"] == pytest.approx(run.cum_loss - base)
    assert run.metrics["C_T"] == 0.0


def test_comparator_matching_gains_is_zero(rng):
    sys, gains = plant(rng, T=10)
    assert not np.any(dac_comparator_from_gains(sys, gains, gains, 3))


def test_comparator_scalar_formula():
    T, H = 6, 4
    sys = LtvSystem.time_invariant(np.array([[0.5]]), np.array([[1.0]]), T, 1.0)
    gains = np.full((T + 1, 1, 1), 0.5)
    gs = np.full((T + 1, 1, 1), 0.2)
    M = dac_comparator_from_gains(sys, gains, gs, H, kappa=1.0, gamma=0.7)
    assert np.allclose(M[:, :, 0, 0], 0.3 * 0.3 ** np.arange(H))


def test_comparator_rejects_unstable_gains():
    T = 4
    sys = LtvSystem.time_invariant(np.array([[1.0]]), np.array([[1.0]]), T, 1.0)
    gains = np.full((T + 1, 1, 1), 0.5)
    with pytest.raises(ValueError):
        dac_comparator_from_gains(sys, gains, np.zeros((T + 1, 1, 1)), 2, kappa=1.0, gamma=0.1)


def test_dac_sufficiency_bound(rng):
    T, H = 100, 3
    for _ in range(5):
        sys, gains = plant(rng, dx=2, du=1, rho=0.7, T=T)
        Ks = rng.standard_normal((1, 2)) * 0.05
        gs = np.broadcast_to(Ks, (T + 1, 1, 2))
        k1, g1 = stability_margins(sys.A[0], sys.B[0], gains[0])
        k2, g2 = stability_margins(sys.A[0], sys.B[0], Ks)
        kappa, gamma = max(1.0, k1, k2), min(g1, g2)
        cost = positive_cost(rng, T)
        cc = constants_for(sys, cost, gains, H, kappa, gamma)
        Mst = dac_comparator_from_gains(sys, gains, gs, H, T, kappa, gamma)
        w = ball_noise(rng, T, 2, 1.0)
        gap = (simulate_dac(sys, cost, gains, Mst, w, T)[2].sum()
               - simulate_linear_policy(sys, cost, gs, w, T)[2].sum())
        assert gap <= cc.sufficiency_bound(T)


def test_failure_reports_round(rng):
    sys, gains = plant(rng, T=10)

    def noise(t, x, u):
        if t == 3:
            raise RuntimeError("sensor fault")
        return np.zeros(3)

    with pytest.raises(ControllerError, match="round 3") as info:
        run_controller("meta_ofw", sys, positive_cost(rng, 10), gains, 2, noise=noise)
    assert info.value.t == 3


def test_argument_errors(rng):
    sys, gains = plant(rng, T=10)
    cost = positive_cost(rng, 10)
    with pytest.raises(ValueError):
        run_controller("sgd", sys, cost, gains, 2)
    with pytest.raises(ValueError):
        run_controller("meta_ofw", sys, cost, gains, 0)
    with pytest.raises(ValueError):
        run_controller("meta_ofw", sys, cost, gains, 2, T=11)


def test_unstable_gain_rejected():
    T = 5
    sys = LtvSystem.time_invariant(np.array([[1.2]]), np.array([[1.0]]), T, 1.0)
    with pytest.raises(ValueError):
        run_controller("meta_ofw", sys, QuadraticCost.constant(1, 1, T), np.zeros((T + 1, 1, 1)), 1)
