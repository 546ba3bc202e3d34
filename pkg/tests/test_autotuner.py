import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wftune.autotuner import TunerConfig, TunerConfigError, init_tuner, set_references, tuner_step
from wftune.cost import WeightVector
from wftune.metrics import MetricsBlock


def block(g2, g3, g1=0.04):
    return MetricsBlock(gamma1=g1, gamma2=g2, gamma3=g3, t_end=0.0, omega=50.0,
                        lambda_xy=0.0, lambda_sc=0.0)


def test_zero_error_zero_integrals():
    cfg = TunerConfig()
    lam, _ = tuner_step(cfg, block(cfg.gamma2_ref, cfg.gamma3_ref), init_tuner(cfg, WeightVector(0, 0)))
    assert lam == WeightVector(0.0, 0.0)
    cfg = TunerConfig(lambda_xy_bounds=(0.1, 5), lambda_sc_bounds=(0.001, 0.01))
    lam, _ = tuner_step(cfg, block(cfg.gamma2_ref, cfg.gamma3_ref), init_tuner(cfg, WeightVector(0.1, 0.001)))
    assert (lam.lambda_xy, lam.lambda_sc) == pytest.approx((0.1, 0.001))


def test_high_gamma2_raises_lambda_xy():
    cfg = TunerConfig()
    st0 = init_tuner(cfg, WeightVector(0.4, 0.002))
    lam, _ = tuner_step(cfg, block(0.07, cfg.gamma3_ref), st0)
    assert lam.lambda_xy > 0.4


def test_hand_summed_recursion():
    cfg = TunerConfig(dt_block=0.0216)
    s = init_tuner(cfg, WeightVector(0.0, 0.0))
    for _ in range(5):
        lam, s = tuner_step(cfg, block(0.06, cfg.gamma3_ref), s)
    assert lam.lambda_xy == pytest.approx(0.01 + 2.8 * 0.01 * 0.0216 * 5, abs=1e-15)
    assert lam.lambda_xy == pytest.approx(0.013024, abs=1e-12)


def test_preload_reproduces_initial_weights():
    for dt in (1.0, 0.0216):
        cfg = TunerConfig(dt_block=dt)
        lam, _ = tuner_step(cfg, block(cfg.gamma2_ref, cfg.gamma3_ref), init_tuner(cfg, WeightVector(0.4, 0.002)))
        assert lam.lambda_xy == pytest.approx(0.4) and lam.lambda_sc == pytest.approx(0.002)


def test_undefined_switching_index_holds_channel():
    cfg = TunerConfig()
    s = init_tuner(cfg, WeightVector(0.4, 0.002))
    lam, s2 = tuner_step(cfg, block(0.06, math.nan), s)
    assert lam.lambda_sc == pytest.approx(0.002) and s2.sc == s.sc
    assert lam.lambda_xy != pytest.approx(0.4)


def test_reference_changes():
    cfg = TunerConfig()
    assert set_references(cfg, cfg.gamma2_ref, cfg.gamma3_ref) == cfg
    new = set_references(cfg, 0.03, 9.0)
    assert (new.gamma2_ref, new.gamma3_ref) == (0.03, 9.0)
    with pytest.raises(TunerConfigError):
        set_references(cfg, -0.01, 9.0)


@pytest.mark.parametrize("bad", [dict(lambda_xy_bounds=(-1, 5)), dict(lambda_sc_bounds=(0.02, 0.01)),
                                 dict(dt_block=0.0), dict(gamma2_ref=-1)])
def test_invalid_config(bad):
    with pytest.raises(TunerConfigError):
        TunerConfig(**bad)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1000)), min_size=1, max_size=40))
def test_weights_stay_in_bounds(blocks):
    cfg = TunerConfig(g_p3=-1e-4, g_i3=-1e-4)
    s = init_tuner(cfg, WeightVector(0.4, 0.002))
    for g2, g3 in blocks:
        lam, s = tuner_step(cfg, block(g2, g3), s)
        assert 0.0 <= lam.lambda_xy <= 5.0 and 0.0 <= lam.lambda_sc <= 0.01
