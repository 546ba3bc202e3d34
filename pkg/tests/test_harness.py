import dataclasses
import math

import numpy as np
import pytest

from wftune import harness as H
from wftune import kernel as K
from wftune.config import Config

BASE = Config()


def short(cfg=BASE, **scenario):
    return H.with_scenario(cfg, **scenario)


def test_zero_duration_gives_empty_log():
    log = H.run(H.Scenario(short(duration=0.0)))
    assert len(log) == 0 and log.blocks == []


def test_one_second_counts():
    log = H.run(H.Scenario(short(duration=1.0)))
    assert len(log) == 33333 and len(log.blocks) == 46
    assert np.all(np.isfinite(log.samples))


def test_block_cadence_and_timestamps(tmp_path):
    log = H.run(H.Scenario(short(duration=0.1)))
    H.write_run(log, tmp_path)
    rows = (tmp_path / "blocks.csv").read_text().splitlines()[1:]
    ts = [row.split(",")[0] for row in rows]
    assert ts[:3] == ["0.02160", "0.04320", "0.06480"]
    lines = (tmp_path / "samples.csv").read_text().splitlines()
    assert lines[0].split(",") == H.SAMPLE_HEADER and len(lines) == 1 + len(log)


def test_run_is_deterministic():
    cfg = H.with_tuner(short(duration=0.2), mode="adaptive", lambda0=(0.2, 0.001), gamma3_ref=169.0)
    a, b = H.run(H.Scenario(cfg)), H.run(H.Scenario(cfg))
    assert np.array_equal(a.samples, b.samples) and np.array_equal(a.u, b.u)
    assert a.blocks == b.blocks


def test_speed_tracks_reference_and_currents_follow():
    log = H.run(H.Scenario(short(duration=0.3)))
    tail = slice(-2000, None)
    assert np.abs(log.column(K.L_OMEGA)[tail] - 50).max() < 0.5
    assert log.blocks[-1].gamma1 < 0.1


def test_selection_committed_one_period_later():
    log = H.run(H.Scenario(short(duration=0.01)))
    assert np.array_equal(log.u[1:], log.u_selected[:-1])
    assert np.array_equal(log.sc[1:], [bin(a ^ b).count("1") for a, b in zip(log.u[1:], log.u[:-1])])


def test_weights_stay_in_bounds_every_period():
    cfg = H.with_tuner(short(duration=1.0, ref_steps=((0.3, 0.001, 1.0),)), mode="adaptive",
                       lambda_xy_bounds=(0.0, 0.9), lambda_sc_bounds=(0.0, 0.003),
                       g_i3=-1.43e-5, g_p3=-6.45e-6)
    log = H.run(H.Scenario(cfg))
    lam = log.lambda_trace
    assert lam[:, 0].min() >= 0 and lam[:, 0].max() <= 0.9
    assert lam[:, 1].min() >= 0 and lam[:, 1].max() <= 0.003
    assert lam[-1, 0] > 0.85 and lam[-1, 1] > 0.0028  # unreachable references drive towards the clamps


def test_wf_step_applied_at_scheduled_sample():
    cfg = short(duration=0.1, wf_steps=((0.05, 0.75, 0.004),))
    log = H.run(H.Scenario(cfg))
    k = int(round(0.05 / 30e-6))
    assert tuple(log.lambda_trace[k - 1]) == (0.4, 0.002)
    assert tuple(log.lambda_trace[k]) == (0.75, 0.004)


def test_profile_values():
    v = H.profile_values([(0.0, 0.0), (1.0, 10.0), (1.0, -5.0)], 5, 0.5)
    assert v.tolist() == [0.0, 5.0, -5.0, -5.0, -5.0]
    assert H.profile_values([(0.2, 3.0)], 3, 0.1).tolist() == [3.0, 3.0, 3.0]


def test_simulation_fault_reports_last_good_time():
    cfg = BASE.replace(machine=dataclasses.replace(BASE.machine, Ts=0.05),
                       plant=dataclasses.replace(BASE.plant, integrator="euler", substeps=1))
    cfg = H.with_scenario(cfg, duration=100.0)
    with pytest.raises(H.SimulationFault) as exc:
        H.run(H.Scenario(cfg))
    n = len(exc.value.log)
    assert exc.value.t_last_good == pytest.approx(max(n - 1, 0) * 0.05)
    assert np.all(np.isfinite(exc.value.log.samples[:, K.L_I_A:K.L_I_Y + 1]))


def test_identity_step_within_noise():
    s, _ = H.step_wf_test(BASE, pre=(0.4, 0.002), post=(0.4, 0.002))
    for name in ("gamma1", "gamma2", "gamma3"):
        band = 4 * max(s.pre_std[name], s.post_std[name])
        assert abs(s.post[name] - s.pre[name]) < band


def test_step_wf_directions():
    s, _ = H.step_wf_test(BASE)
    assert s.sign["gamma2"] < 0
    assert s.sign["gamma1"] > 0 or s.sign["gamma3"] > 0


def test_reversal_symmetry_and_rejection():
    cfg = H.with_tuner(BASE, lambda0=(0.2, 0.001), gamma3_ref=169.0, g_i3=-1.43e-5, g_p3=-6.45e-6)
    up_a, up_f = H.reversal_test(cfg, 50.0)
    dn_a, dn_f = H.reversal_test(cfg, -50.0)
    for a, b in ((up_a, dn_a), (up_f, dn_f)):
        ra, rb = H.speed_rms(a), H.speed_rms(b)
        assert abs(ra - rb) <= 0.05 * max(ra, rb)
    with pytest.raises(ValueError):
        H.reversal_test(cfg, 0.0)


def test_single_point_pareto():
    rows = H.pareto_sweep(H.with_scenario(BASE), [(0.4, 0.002)])
    assert len(rows) == 1 and rows[0].lambda_xy == 0.4
    with pytest.raises(ValueError):
        H.pareto_sweep(BASE, [])


def test_adaptive_point_inside_sweep_region():
    cfg = H.with_tuner(BASE, mode="adaptive", lambda0=(0.2, 0.001), gamma2_ref=0.04,
                       gamma3_ref=150.0, g_i3=-1.43e-5, g_p3=-6.45e-6)
    log = H.run(H.Scenario(H.with_scenario(cfg, duration=1.5)))
    tail = log.blocks[-15:]
    g2 = np.mean([b.gamma2 for b in tail])
    g3 = np.mean([b.gamma3 for b in tail])
    lxy = np.mean([b.lambda_xy for b in tail])
    lsc = np.mean([b.lambda_sc for b in tail])
    # neighbouring grid: the closest bracketing weights on both axes
    xs = sorted({0.5 * lxy, 2.0 * lxy})
    ss = sorted({0.5 * lsc, 2.0 * lsc})
    rows = H.pareto_sweep(BASE, [(a, b) for a in xs for b in ss])
    assert min(r.gamma2 for r in rows) <= g2 <= max(r.gamma2 for r in rows)
    assert min(r.gamma3 for r in rows) <= g3 <= max(r.gamma3 for r in rows)


def test_settling_time_helper():
    log = H.run(H.Scenario(short(duration=0.5)))
    g2 = np.mean([b.gamma2 for b in log.blocks[5:]])
    assert H.settling_time(log, "gamma2", g2, 0.0, band=0.5) == pytest.approx(0.0)
    assert H.settling_time(log, "gamma2", 10.0, 0.0) is None


def test_reference_norm_and_block_rms_match_log():
    log = H.run(H.Scenario(short(duration=0.3, speed=((0.0, 0.0), (0.2, 60.0)))))
    s = log.samples
    istar = np.hypot(BASE.outer_loop.ids_ref, s[:, K.L_IQS])
    assert np.allclose(np.hypot(s[:, K.L_REF_A], s[:, K.L_REF_B]), istar, atol=1e-12)
    e = s[:, K.L_REF_A:K.L_REF_Y + 1] - s[:, K.L_I_A:K.L_I_Y + 1]
    N = log.N
    for j, b in enumerate(log.blocks):
        w = e[j * N:(j + 1) * N]
        assert b.gamma1 == pytest.approx(math.sqrt(np.mean(w[:, 0] ** 2 + w[:, 1] ** 2)), abs=1e-12)
        assert b.gamma2 == pytest.approx(math.sqrt(np.mean(w[:, 2] ** 2 + w[:, 3] ** 2)), abs=1e-12)
        assert b.switch_rate == pytest.approx(log.sc[j * N:(j + 1) * N].sum() / 6 / (N * log.Ts))


@pytest.fixture(scope="module")
def gamma2_step_log():
    cfg = H.with_tuner(BASE, lambda0=(0.2, 0.001), gamma3_ref=169.0, g_i3=-1.43e-5, g_p3=-6.45e-6)
    cfg = H.step_ref_config(H.with_scenario(cfg))
    return cfg, H.run(H.Scenario(cfg))


def test_weights_change_only_at_block_boundaries(gamma2_step_log):
    _, log = gamma2_step_log
    change = np.flatnonzero(np.any(np.diff(log.lambda_trace, axis=0) != 0, axis=1)) + 1
    assert len(change) > 20 and np.all(change % log.N == 0)


def test_channel_signs_and_coupling(gamma2_step_log):
    cfg, log = gamma2_step_log
    t_step = cfg.scenario.ref_steps[0][0]
    pre = H.block_slice(log, 0.0, t_step, skip=cfg.analysis.discard_blocks)[-20:]
    post = log.blocks[-20:]
    mean = lambda blocks, name: np.mean([getattr(b, name) for b in blocks])  # noqa: E731
    assert mean(post, "lambda_xy") > mean(pre, "lambda_xy")
    # more x-y suppression costs commutations, which the switching loop answers by easing lambda_sc
    assert abs(mean(post, "lambda_sc") - mean(pre, "lambda_sc")) > 0.05 * mean(pre, "lambda_sc")
