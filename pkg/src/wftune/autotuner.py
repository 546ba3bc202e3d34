"""Closed-loop weighting-factor tuning.

Two PI loops run once per metrics block: one moves ``lambda_xy`` to hold the
x-y error index at its reference, the other moves ``lambda_sc`` to hold the
switching index at its reference.  Gains are negative because raising a
weight lowers the index it penalises.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .cost import WeightVector
from .metrics import MetricsBlock
from .outer_loop import PiState, pi_step, preload


class TunerConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TunerConfig:
    gamma2_ref: float = 0.050
    gamma3_ref: float = 100.0
    g_p2: float = -1.0
    g_i2: float = -2.8
    g_p3: float = -4.5e-8
    g_i3: float = -1e-7
    lambda_xy_bounds: tuple = (0.0, 5.0)
    lambda_sc_bounds: tuple = (0.0, 0.01)
    dt_block: float = 720 * 30e-6

    def __post_init__(self):
        for name in ("lambda_xy_bounds", "lambda_sc_bounds"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise TunerConfigError(f"tuner.{name} must satisfy 0 <= lo <= hi, got {(lo, hi)}")
        if self.dt_block <= 0:
            raise TunerConfigError("tuner dt_block must be positive")
        for name in ("gamma2_ref", "gamma3_ref"):
            if getattr(self, name) < 0:
                raise TunerConfigError(f"tuner.{name} must be >= 0")


@dataclass(frozen=True)
class TunerState:
    xy: PiState
    sc: PiState


def init_tuner(cfg: TunerConfig, initial: WeightVector) -> TunerState:
    """Integrators preloaded so the first zero-error update returns ``initial``."""
    xy = PiState(kp=cfg.g_p2, ki=cfg.g_i2, u_min=cfg.lambda_xy_bounds[0],
                 u_max=cfg.lambda_xy_bounds[1], dt=cfg.dt_block)
    sc = PiState(kp=cfg.g_p3, ki=cfg.g_i3, u_min=cfg.lambda_sc_bounds[0],
                 u_max=cfg.lambda_sc_bounds[1], dt=cfg.dt_block)
    return TunerState(xy=preload(xy, initial.lambda_xy), sc=preload(sc, initial.lambda_sc))


def _hold(s: PiState) -> float:
    return min(max(s.ki * s.integ, s.u_min), s.u_max)


def tuner_step(cfg: TunerConfig, block: MetricsBlock, state: TunerState):
    """Advance both loops by one block; returns ``(WeightVector, TunerState)``.

    A channel whose index is undefined for the block (gamma3 at zero
    electrical frequency) holds its integrator and outputs the integral term.
    """
    if math.isfinite(block.gamma2):
        lam_xy, xy = pi_step(state.xy, cfg.gamma2_ref - block.gamma2)
    else:
        lam_xy, xy = _hold(state.xy), state.xy
    if math.isfinite(block.gamma3):
        lam_sc, sc = pi_step(state.sc, cfg.gamma3_ref - block.gamma3)
    else:
        lam_sc, sc = _hold(state.sc), state.sc
    return WeightVector(lam_xy, lam_sc), TunerState(xy=xy, sc=sc)


def set_references(cfg: TunerConfig, gamma2_ref: float, gamma3_ref: float) -> TunerConfig:
    if gamma2_ref < 0 or gamma3_ref < 0:
        raise TunerConfigError("performance references must be non-negative")
    return replace(cfg, gamma2_ref=float(gamma2_ref), gamma3_ref=float(gamma3_ref))
