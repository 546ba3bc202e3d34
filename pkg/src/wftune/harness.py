"""Scenario orchestration, run logs and CSV output."""
from __future__ import annotations

import csv
import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

import numpy as np

from . import kernel as K
from .autotuner import TunerConfig, init_tuner, set_references, tuner_step
from .config import Config
from .cost import WeightVector
from .machine import INTEGRATORS, IntegrationFault, magnetized_state
from .metrics import MetricsAccumulator
from .vsi import voltage_table


SAMPLE_HEADER = ["t", "iref_alpha", "iref_beta", "iref_x", "iref_y",
                 "i_alpha", "i_beta", "i_x", "i_y", "u", "sc", "J",
                 "omega", "omega_ref", "iqs_ref"]
BLOCK_HEADER = ["t", "gamma1", "gamma2", "gamma3", "switch_rate", "lambda_xy", "lambda_sc",
                "omega", "gamma2_ref", "gamma3_ref"]


class SimulationFault(IntegrationFault):
    def __init__(self, t_last_good: float, log: "RunLog"):
        super().__init__(f"non-finite plant state; last good sample at t={t_last_good!r} s")
        self.t_last_good = t_last_good
        self.log = log


@dataclass(frozen=True)
class Scenario:
    """Resolved description of one simulation run."""

    config: Config

    @property
    def Ts(self) -> float:
        return self.config.machine.Ts

    @property
    def N(self) -> int:
        return self.config.metrics.N

    @property
    def n_samples(self) -> int:
        return int(math.floor(self.config.scenario.duration / self.Ts + 1e-9))

    @property
    def adaptive(self) -> bool:
        return self.config.tuner.mode == "adaptive"

    def tuner_config(self) -> TunerConfig:
        t = self.config.tuner
        return TunerConfig(gamma2_ref=t.gamma2_ref, gamma3_ref=t.gamma3_ref,
                           g_p2=t.g_p2, g_i2=t.g_i2, g_p3=t.g_p3, g_i3=t.g_i3,
                           lambda_xy_bounds=tuple(t.lambda_xy_bounds),
                           lambda_sc_bounds=tuple(t.lambda_sc_bounds),
                           dt_block=self.tuner_dt)

    @property
    def tuner_dt(self) -> float:
        """Integration period of the weight loops: one block, or N*Ts seconds."""
        if self.config.tuner.time_base == "seconds":
            return self.N * self.Ts
        return 1.0


@dataclass
class RunLog:
    """Per-sample arrays plus the list of finalised metrics blocks."""

    Ts: float
    N: int
    samples: np.ndarray  # (n, kernel.LOG_COLS)
    u: np.ndarray
    u_selected: np.ndarray
    sc: np.ndarray
    blocks: list = field(default_factory=list)
    gamma_refs: list = field(default_factory=list)
    lambda_trace: np.ndarray | None = None  # (n, 2) weights in force at each sample

    def __len__(self):
        return len(self.u)

    @property
    def t(self) -> np.ndarray:
        return np.arange(len(self.u)) * self.Ts

    def column(self, idx: int) -> np.ndarray:
        return self.samples[:, idx]

    def block_array(self, name: str) -> np.ndarray:
        return np.array([getattr(b, name) for b in self.blocks], dtype=float)


def profile_values(points, n: int, Ts: float) -> np.ndarray:
    """Sample a piecewise-linear ``[[t, value], ...]`` profile at ``k*Ts``.

    Two points with the same time form a step: the later one wins from that
    instant on.
    """
    t = np.arange(n) * Ts
    pts = [(float(a), float(b)) for a, b in points]
    out = np.full(n, pts[0][1])
    for (t0, v0), (t1, v1) in zip(pts, pts[1:]):
        if t1 > t0:
            mask = (t >= t0) & (t < t1)
            out[mask] = v0 + (v1 - v0) * (t[mask] - t0) / (t1 - t0)
        out[t >= t1] = v1
    return out


def _sample_index(t: float, Ts: float) -> int:
    return int(math.ceil(t / Ts - 1e-9))


def run(scenario: Scenario) -> RunLog:
    """Simulate a scenario; deterministic for identical inputs."""
    cfg = scenario.config
    mp = cfg.machine
    Ts, N = mp.Ts, scenario.N
    n = scenario.n_samples
    sc_cfg = cfg.scenario

    p = mp.as_array()
    speed = profile_values(sc_cfg.speed, n, Ts)
    load = profile_values(sc_cfg.load, n, Ts)
    omega0 = sc_cfg.initial_speed if sc_cfg.initial_speed is not None else float(sc_cfg.speed[0][1])
    x = magnetized_state(mp, cfg.outer_loop.ids_ref, omega0).as_array()

    ol = cfg.outer_loop
    opts = np.zeros(K.OPTS_SIZE)
    opts[K.O_IDS] = ol.ids_ref
    opts[K.O_TAU_R] = mp.tau_r * ol.tau_r_multiplier
    opts[K.O_KP] = ol.kp
    opts[K.O_KI] = ol.ki
    opts[K.O_IQS_MAX] = ol.iqs_max
    opts[K.O_DECIM] = ol.decimation
    opts[K.O_SUBSTEPS] = cfg.plant.substeps
    opts[K.O_ROTOR_ON] = 1.0 if cfg.plant.rotor_branch else 0.0
    opts[K.O_METHOD] = INTEGRATORS[cfg.plant.integrator]
    opts[K.O_G_ALPHA] = cfg.predictor.g_filter_alpha if cfg.predictor.g_filter else 1.0
    opts[K.O_REBUILD] = cfg.predictor.rebuild_threshold

    ctrl = np.zeros(K.CTRL_SIZE)
    ustate = np.zeros(3, dtype=np.int64)
    pred = np.zeros(4)
    G = np.zeros(4)
    vtable = np.ascontiguousarray(voltage_table(mp.Vdc))

    flog = np.zeros((n, K.LOG_COLS))
    u_log = np.zeros(n, dtype=np.int64)
    sel_log = np.zeros(n, dtype=np.int64)
    sc_log = np.zeros(n, dtype=np.int64)
    lam_trace = np.zeros((n, 2))
    runlog = RunLog(Ts=Ts, N=N, samples=flog, u=u_log, u_selected=sel_log, sc=sc_log,
                    lambda_trace=lam_trace)

    weights = WeightVector(*cfg.tuner.lambda0)
    tcfg = scenario.tuner_config()
    tstate = init_tuner(tcfg, weights)
    acc = MetricsAccumulator(N=N, Ts=Ts)

    wf_steps = [(_sample_index(t, Ts), WeightVector(a, b)) for t, a, b in sc_cfg.wf_steps]
    ref_steps = [(t, g2, g3) for t, g2, g3 in sc_cfg.ref_steps]
    stops = sorted({k for k, _ in wf_steps if 0 < k < n}
                   | set(range(N, n + 1, N)) | {n})

    k = 0
    wf_iter = 0
    ref_iter = 0
    while k < n:
        while wf_iter < len(wf_steps) and wf_steps[wf_iter][0] <= k:
            weights = wf_steps[wf_iter][1]
            tstate = init_tuner(tcfg, weights)
            wf_iter += 1
        stop = next(s for s in stops if s > k)
        count = stop - k
        status = K.run_samples(k, count, x, ctrl, ustate, pred, G, p, opts, speed, load,
                               weights.lambda_xy, weights.lambda_sc, vtable,
                               flog, u_log, sel_log, sc_log)
        lam_trace[k:stop] = (weights.lambda_xy, weights.lambda_sc)
        if status >= 0:
            _truncate(runlog, status)
            raise SimulationFault(max(status - 1, 0) * Ts, runlog)
        e = flog[k:stop, K.L_REF_A:K.L_REF_Y + 1] - flog[k:stop, K.L_I_A:K.L_I_Y + 1]
        acc.accumulate_many(e[:, 0] ** 2 + e[:, 1] ** 2, e[:, 2] ** 2 + e[:, 3] ** 2,
                            sc_log[k:stop], flog[k:stop, K.L_OMEGA_E], flog[k:stop, K.L_OMEGA])
        k = stop
        if k % N == 0:
            t_end = k * Ts
            block = acc.finalize(t_end=t_end, lambda_xy=weights.lambda_xy,
                                 lambda_sc=weights.lambda_sc)
            runlog.blocks.append(block)
            runlog.gamma_refs.append((tcfg.gamma2_ref, tcfg.gamma3_ref))
            while ref_iter < len(ref_steps) and ref_steps[ref_iter][0] <= t_end + 1e-12:
                _, g2, g3 = ref_steps[ref_iter]
                tcfg = set_references(tcfg, g2, g3)
                ref_iter += 1
            if scenario.adaptive:
                weights, tstate = tuner_step(tcfg, block, tstate)
    return runlog


def _truncate(runlog: RunLog, n: int):
    runlog.samples = runlog.samples[:n]
    runlog.u = runlog.u[:n]
    runlog.u_selected = runlog.u_selected[:n]
    runlog.sc = runlog.sc[:n]
    runlog.lambda_trace = runlog.lambda_trace[:n]


# ---------------------------------------------------------------- output


def _exact_times(n: int, step: float, start: int = 0):
    d = Decimal(repr(step))
    return [format(d * k, "f") for k in range(start, start + n)]


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_samples_csv(runlog: RunLog, path):
    n = len(runlog)
    times = _exact_times(n, runlog.Ts)
    s = runlog.samples
    cols = [K.L_REF_A, K.L_REF_B, K.L_REF_X, K.L_REF_Y, K.L_I_A, K.L_I_B, K.L_I_X, K.L_I_Y]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SAMPLE_HEADER)
        for k in range(n):
            row = s[k]
            w.writerow([times[k], *(_fmt(row[c]) for c in cols), int(runlog.u[k]),
                        int(runlog.sc[k]), _fmt(row[K.L_J]), _fmt(row[K.L_OMEGA]),
                        _fmt(row[K.L_OMEGA_REF]), _fmt(row[K.L_IQS])])


def write_blocks_csv(runlog: RunLog, path):
    d = Decimal(repr(runlog.Ts)) * runlog.N
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BLOCK_HEADER)
        for i, (b, (g2, g3)) in enumerate(zip(runlog.blocks, runlog.gamma_refs), start=1):
            w.writerow([format(d * i, "f"), _fmt(b.gamma1), _fmt(b.gamma2), _fmt(b.gamma3),
                        _fmt(b.switch_rate), _fmt(b.lambda_xy), _fmt(b.lambda_sc),
                        _fmt(b.omega), _fmt(g2), _fmt(g3)])


def write_run(runlog: RunLog, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_samples_csv(runlog, out / "samples.csv")
    write_blocks_csv(runlog, out / "blocks.csv")


# ------------------------------------------------------------ experiments


def with_scenario(cfg: Config, **changes) -> Config:
    return cfg.replace(scenario=dataclasses.replace(cfg.scenario, **changes))


def with_tuner(cfg: Config, **changes) -> Config:
    return cfg.replace(tuner=dataclasses.replace(cfg.tuner, **changes))


def block_slice(runlog: RunLog, t_from: float, t_to: float, skip: int = 0):
    """Blocks lying entirely inside ``[t_from, t_to]``, dropping the first ``skip``."""
    dt = runlog.N * runlog.Ts
    sel = [b for b in runlog.blocks
           if b.t_end - dt >= t_from - 1e-12 and b.t_end <= t_to + 1e-12]
    return sel[skip:]


def block_stats(blocks, name: str):
    vals = np.array([getattr(b, name) for b in blocks], dtype=float)
    if len(vals) == 0:
        return math.nan, math.nan
    return float(np.mean(vals)), float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0


@dataclass(frozen=True)
class StepSummary:
    pre: dict
    post: dict
    pre_std: dict
    post_std: dict

    @property
    def sign(self) -> dict:
        return {k: int(np.sign(self.post[k] - self.pre[k])) for k in self.pre}

    def rows(self):
        for name in self.pre:
            yield name, self.pre[name], self.post[name], self.pre_std[name], self.post_std[name], self.sign[name]


def summarize_step(runlog: RunLog, t_step: float, discard: int, skip_after: int = 1) -> StepSummary:
    pre_blocks = block_slice(runlog, 0.0, t_step, skip=discard)
    post_blocks = block_slice(runlog, t_step, math.inf, skip=skip_after)
    pre, post, pre_s, post_s = {}, {}, {}, {}
    for name in ("gamma1", "gamma2", "gamma3"):
        pre[name], pre_s[name] = block_stats(pre_blocks, name)
        post[name], post_s[name] = block_stats(post_blocks, name)
    return StepSummary(pre, post, pre_s, post_s)


def settling_time(runlog: RunLog, name: str, target: float, t_step: float,
                  band: float = 0.10, hold: int = 10):
    """Delay from ``t_step`` to the start of the first run of ``hold`` consecutive
    blocks whose ``name`` index stays within ``band * target`` of ``target``.

    Only blocks starting at or after ``t_step`` count.  ``None`` if never settled.
    """
    dt = runlog.N * runlog.Ts
    starts = runlog.block_array("t_end") - dt
    vals = runlog.block_array(name)
    ok = np.abs(vals - target) < band * abs(target)
    for i in range(len(vals) - hold + 1):
        if starts[i] >= t_step - 1e-12 and ok[i:i + hold].all():
            return float(starts[i] - t_step)
    return None


def step_wf_config(cfg: Config, pre=None, post=None, speed=None, load=None) -> Config:
    exp = cfg.experiments.step_wf
    pre = tuple(pre if pre is not None else exp.pre)
    post = tuple(post if post is not None else exp.post)
    changes = dict(duration=exp.duration, wf_steps=((exp.t_step, *post),))
    if speed is not None:
        changes["speed"] = ((0.0, float(speed)),)
    if load is not None:
        changes["load"] = ((0.0, float(load)),)
    cfg = with_tuner(cfg, mode="fixed", lambda0=pre)
    return with_scenario(cfg, **changes)


def step_wf_test(cfg: Config, pre=None, post=None, speed=None, load=None):
    """Fixed-weight run with one mid-run weight step; returns ``(StepSummary, RunLog)``."""
    cfg = step_wf_config(cfg, pre, post, speed, load)
    runlog = run(Scenario(cfg))
    t_step = cfg.scenario.wf_steps[0][0]
    return summarize_step(runlog, t_step, cfg.analysis.discard_blocks), runlog


def step_ref_config(cfg: Config) -> Config:
    exp = cfg.experiments.step_ref
    g2 = tuple(exp.gamma2) if exp.gamma2 else (cfg.tuner.gamma2_ref,) * 2
    g3 = tuple(exp.gamma3) if exp.gamma3 else (cfg.tuner.gamma3_ref,) * 2
    cfg = with_tuner(cfg, mode="adaptive", gamma2_ref=g2[0], gamma3_ref=g3[0])
    return with_scenario(cfg, duration=exp.duration, ref_steps=((exp.t_step, g2[1], g3[1]),))


def reversal_configs(cfg: Config, omega_target=None):
    exp = cfg.experiments.reversal
    w = exp.omega_target if omega_target is None else float(omega_target)
    if w == 0:
        raise ValueError("reversal target speed must be non-zero")
    base = with_scenario(cfg, duration=exp.duration, initial_speed=w,
                         speed=((0.0, w), (exp.t_flip, w), (exp.t_flip, -w)))
    return with_tuner(base, mode="adaptive"), with_tuner(base, mode="fixed")


def speed_rms(runlog: RunLog) -> float:
    e = runlog.column(K.L_OMEGA_REF) - runlog.column(K.L_OMEGA)
    return float(np.sqrt(np.mean(e ** 2)))


def reversal_test(cfg: Config, omega_target=None):
    """Adaptive and fixed-weight runs of the same speed reversal: ``(adaptive_log, fixed_log)``."""
    adaptive, fixed = reversal_configs(cfg, omega_target)
    return run(Scenario(adaptive)), run(Scenario(fixed))


@dataclass(frozen=True)
class ParetoRow:
    lambda_xy: float
    lambda_sc: float
    gamma1: float
    gamma2: float
    gamma3: float
    switch_rate: float


def _pareto_point(args):
    cfg, lam = args
    cfg = with_tuner(cfg, mode="fixed", lambda0=tuple(lam))
    cfg = with_scenario(cfg, duration=cfg.experiments.pareto.duration, wf_steps=(), ref_steps=())
    runlog = run(Scenario(cfg))
    blocks = runlog.blocks[cfg.analysis.discard_blocks:]
    vals = {name: block_stats(blocks, name)[0]
            for name in ("gamma1", "gamma2", "gamma3", "switch_rate")}
    return ParetoRow(lam[0], lam[1], **vals)


def pareto_sweep(cfg: Config, lambda_grid=None, jobs: int = 1) -> list:
    """Steady-state indices for every weight pair in ``lambda_grid``."""
    if lambda_grid is None:
        exp = cfg.experiments.pareto
        lambda_grid = [(a, b) for b in exp.lambda_sc for a in exp.lambda_xy]
    lambda_grid = [tuple(map(float, lam)) for lam in lambda_grid]
    if not lambda_grid:
        raise ValueError("pareto grid must be non-empty")
    tasks = [(cfg, lam) for lam in lambda_grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_pareto_point, tasks))
    return [_pareto_point(t) for t in tasks]


def write_pareto_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda_xy", "lambda_sc", "gamma1", "gamma2", "gamma3", "switch_rate"])
        for r in rows:
            w.writerow([_fmt(r.lambda_xy), _fmt(r.lambda_sc), _fmt(r.gamma1), _fmt(r.gamma2),
                        _fmt(r.gamma3), _fmt(r.switch_rate)])


def write_step_summary(summary: StepSummary, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "pre_mean", "post_mean", "pre_std", "post_std", "sign"])
        for name, a, b, sa, sb, sign in summary.rows():
            w.writerow([name, _fmt(a), _fmt(b), _fmt(sa), _fmt(sb), sign])
