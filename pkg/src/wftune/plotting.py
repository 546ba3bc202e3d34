"""PNG figures rendered next to the CSV outputs.

Optional: needs matplotlib (``pip install .[plot]``).  Nothing in the
simulation path imports this module.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from . import kernel as K

FIGSIZE = (8.0, 4.8)
DPI = 110


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    _pyplot().close(fig)
    return Path(path)


def _block_times(runlog):
    return np.array([b.t_end for b in runlog.blocks])


def plot_currents(runlog, path, window=0.04):
    """Reference vs measured alpha-beta and x-y currents over the last ``window`` seconds."""
    plt = _pyplot()
    t = runlog.t
    sel = t >= t[-1] - window if len(t) else slice(None)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=FIGSIZE, sharex=True)
    for col, ref, name in ((K.L_I_A, K.L_REF_A, "alpha"), (K.L_I_B, K.L_REF_B, "beta")):
        ax1.plot(t[sel], runlog.column(col)[sel], lw=0.8, label=f"i_{name}")
        ax1.plot(t[sel], runlog.column(ref)[sel], "--", lw=0.8, label=f"i*_{name}")
    for col, name in ((K.L_I_X, "x"), (K.L_I_Y, "y")):
        ax2.plot(t[sel], runlog.column(col)[sel], lw=0.8, label=f"i_{name}")
    ax1.set_ylabel("current [A]")
    ax2.set_ylabel("current [A]")
    ax2.set_xlabel("t [s]")
    ax1.legend(fontsize=8, ncol=4)
    ax2.legend(fontsize=8)
    return _save(fig, path)


def plot_indices(runlog, path):
    """Per-block indices with their references and the weights in force."""
    plt = _pyplot()
    tb = _block_times(runlog)
    refs = np.array(runlog.gamma_refs) if runlog.gamma_refs else np.full((len(tb), 2), np.nan)
    fig, axes = plt.subplots(2, 2, figsize=(10, 6), sharex=True)
    ax = axes[0, 0]
    ax.plot(tb, runlog.block_array("gamma1"), ".-")
    ax.set_ylabel("gamma1 [A]")
    ax = axes[0, 1]
    ax.plot(tb, runlog.block_array("gamma2"), ".-")
    ax.plot(tb, refs[:, 0], "k--", lw=0.8)
    ax.set_ylabel("gamma2 [A]")
    ax = axes[1, 0]
    ax.plot(tb, runlog.block_array("gamma3"), ".-")
    ax.plot(tb, refs[:, 1], "k--", lw=0.8)
    ax.set_ylabel("gamma3")
    ax.set_xlabel("t [s]")
    ax = axes[1, 1]
    ax.plot(tb, runlog.block_array("lambda_xy"), ".-", label="lambda_xy")
    ax.set_ylabel("lambda_xy")
    ax.set_xlabel("t [s]")
    tw = ax.twinx()
    tw.plot(tb, runlog.block_array("lambda_sc"), ".-", color="C1", label="lambda_sc")
    tw.set_ylabel("lambda_sc")
    return _save(fig, path)


def plot_speed(runlog, path, label=None, other=None, other_label=None):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.plot(runlog.t, runlog.column(K.L_OMEGA_REF), "k--", lw=0.8, label="reference")
    ax.plot(runlog.t, runlog.column(K.L_OMEGA), lw=1.0, label=label or "speed")
    if other is not None:
        ax.plot(other.t, other.column(K.L_OMEGA), lw=1.0, label=other_label)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("omega [rad/s]")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_run(runlog, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [plot_currents(runlog, out / "currents.png"),
            plot_indices(runlog, out / "indices.png"),
            plot_speed(runlog, out / "speed.png")]


def plot_reversal(adaptive, fixed, out_dir):
    out = Path(out_dir)
    paths = plot_run(adaptive, out / "adaptive") + plot_run(fixed, out / "fixed")
    paths.append(plot_speed(adaptive, out / "speed_compare.png", "adaptive", fixed, "fixed"))
    return paths


def plot_pareto(rows, out_dir):
    """gamma2 vs gamma3 for every grid point, coloured by gamma1."""
    plt = _pyplot()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    g2 = np.array([r.gamma2 for r in rows])
    g3 = np.array([r.gamma3 for r in rows])
    g1 = np.array([r.gamma1 for r in rows])
    fig, ax = plt.subplots(figsize=FIGSIZE)
    sc = ax.scatter(g3, g2, c=g1, cmap="viridis")
    for r in rows:
        ax.annotate(f"{r.lambda_xy:g}/{r.lambda_sc:g}", (r.gamma3, r.gamma2), fontsize=6,
                    xytext=(2, 2), textcoords="offset points")
    fig.colorbar(sc, ax=ax, label="gamma1 [A]")
    ax.set_xlabel("gamma3")
    ax.set_ylabel("gamma2 [A]")
    return [_save(fig, out / "pareto.png")]
