import math

import numpy as np
import pytest

from metaofw.control import control_constants, control_meta_rate, control_step_pool


def cc_ref(**kw):
    args = dict(kappa=2.0, gamma=0.5, kappa_B=1.0, H=2, d_u=1, d_x=2, W=1.0, G_c=1.0, beta=1.0)
    args.update(kw)
    return control_constants(**args)


def test_D_f_unit_case():
    cc = control_constants(1.0, 0.5, 1.0, 1, 1, 1, 1.0, 1.0, 1.0)
    assert cc.D_f == pytest.approx(4.0)
    assert cc.d == 1 and cc.tau == 1.0


def test_worked_constant_set():
    # tau = 8, kappa^2 (1 - gamma)^3 = 0.5, D = 8 * 17 / 0.25 + 16
    cc = cc_ref()
    assert cc.D_bar == pytest.approx(560.0)
    assert cc.L_f == pytest.approx(13440.0 * math.sqrt(2.0))
    assert cc.G_f == pytest.approx(96.0)
    assert cc.D_f == pytest.approx(32.0)
    assert cc.zeta == pytest.approx(16.0 * 13440.0 * math.sqrt(2.0))
    assert cc.sigma == pytest.approx(1254400.0)
    assert cc.phi == pytest.approx(1881600.0)
    assert cc.theta == pytest.approx(2508800.0)


def test_gamma_monotonicity():
    prev = None
    for gamma in (0.45, 0.5, 0.7, 0.9):
        cc = cc_ref(gamma=gamma)
        if prev is not None:
            assert cc.D_f < prev.D_f and cc.G_f < prev.G_f and cc.D_bar < prev.D_bar
        prev = cc


def test_precondition_error():
    with pytest.raises(ValueError, match=r"kappa\^2 \(1 - gamma\)\^\(H \+ 1\)"):
        cc_ref(kappa=3.0, gamma=0.1, H=1)


@pytest.mark.parametrize("kw", [dict(gamma=0.0), dict(gamma=1.5), dict(W=0.0), dict(H=0),
                                dict(kappa_B=-1.0)])
def test_invalid_inputs(kw):
    with pytest.raises(ValueError):
        cc_ref(**kw)


def test_step_pool_worked_instance():
    cc = cc_ref()
    T = 100
    pool = control_step_pool(T, cc)
    # (2 * 560^2 * 100 + phi) / sigma = 51.5  ->  N = ceil(log2(51.5) / 2) + 1 = 4
    assert pool.N == 4
    base = math.sqrt(1254400.0 / (16.0 * 13440.0 * math.sqrt(2.0) * T * 32.0))
    assert np.allclose(pool.etas, [base * 2**i for i in range(4)])


def test_pool_has_two_members_when_long(rng):
    for _ in range(50):
        cc = cc_ref(kappa=rng.uniform(1.0, 1.3), gamma=rng.uniform(0.2, 0.9),
                    H=int(rng.integers(1, 6)), beta=rng.uniform(0.1, 5))
        T = int(rng.integers(1, 10**5))
        assert 2 * cc.beta * cc.D_bar**2 * T >= cc.sigma or T < 2
        assert control_step_pool(T, cc).N >= 2
        assert cc.phi - 2 * cc.beta * cc.D_bar**2 == pytest.approx(cc.sigma)


def test_meta_rate_scaling():
    cc = cc_ref()
    e1, e4 = control_meta_rate(cc, 100), control_meta_rate(cc, 400)
    assert e1 / e4 == pytest.approx(2.0)
    expect = math.sqrt(2.0 / ((2 * cc.zeta + cc.G_f) * (cc.zeta + cc.G_f) * cc.D_f**2 * 100))
    assert e1 == pytest.approx(expect)


def test_step_pool_rejects_bad_T():
    with pytest.raises(ValueError):
        control_step_pool(0, cc_ref())


def test_derived_bounds():
    cc = cc_ref()
    assert cc.truncation_bound() == pytest.approx(2 * 560.0**2 * 8 * 0.125)
    assert cc.sufficiency_bound(10) == pytest.approx(4 * 10 * 560.0 * 2 * 64 * 0.5 / 0.5)
    assert cc.slot_lipschitz(1) == pytest.approx(cc.L_f)
    assert cc.slot_lipschitz(3) == pytest.approx(cc.L_f * 0.25)
