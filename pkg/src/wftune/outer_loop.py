"""Indirect field-oriented reference generation: speed PI, slip and flux angle."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from numba import njit

TWO_PI = 2.0 * math.pi


class DegenerateReference(ValueError):
    """Raised when the magnetising current set-point is zero."""


@dataclass(frozen=True)
class PiState:
    kp: float
    ki: float
    integ: float = 0.0
    u_min: float = -math.inf
    u_max: float = math.inf
    dt: float = 1.0

    def __post_init__(self):
        if self.u_min > self.u_max:
            raise ValueError("PI clamp requires u_min <= u_max")
        if self.dt <= 0:
            raise ValueError("PI update period must be positive")


@njit(cache=True)
def _pi_update(kp, ki, integ, e, dt, u_min, u_max, anti_windup):
    integ_new = integ + e * dt
    raw = kp * e + ki * integ_new
    if anti_windup:
        # conditional integration: hold the integrator if it pushes further into the clamp
        drive = ki * e
        if (raw > u_max and drive > 0.0) or (raw < u_min and drive < 0.0):
            integ_new = integ
            raw = kp * e + ki * integ_new
    out = min(max(raw, u_min), u_max)
    return out, integ_new


def pi_step(s: PiState, e: float, anti_windup: bool = True):
    """One rectangular-integration PI update; returns ``(output, new_state)``."""
    out, integ = _pi_update(s.kp, s.ki, s.integ, float(e), s.dt, s.u_min, s.u_max, anti_windup)
    return out, replace(s, integ=integ)


def preload(s: PiState, output: float) -> PiState:
    """Set the integrator so that a zero error reproduces ``output``."""
    if s.ki == 0:
        return s
    return replace(s, integ=output / s.ki)


@dataclass(frozen=True)
class ReferenceFrame:
    ids_ref: float
    iqs_ref: float
    omega_e: float
    theta_a: float

    @property
    def I_star(self) -> float:
        return math.hypot(self.ids_ref, self.iqs_ref)


def slip_frequency(iqs_ref: float, ids_ref: float, tau_r_hat: float) -> float:
    if ids_ref == 0:
        raise DegenerateReference("magnetising current set-point is zero")
    if tau_r_hat <= 0:
        raise ValueError("rotor time constant estimate must be positive")
    return (iqs_ref / ids_ref) / tau_r_hat


def advance_flux_angle(theta_a: float, omega_e: float, dt: float) -> float:
    theta = (theta_a + omega_e * dt) % TWO_PI
    return 0.0 if theta >= TWO_PI else theta


def reference_phase(theta_a: float, ids_ref: float, iqs_ref: float) -> float:
    """Argument fed to :func:`current_references` for a field angle ``theta_a``.

    The (sin, cos) reference pair measures its argument clockwise from the
    beta axis, while the plant rotates counter-clockwise for positive speed.
    The current vector must sit at ``theta_a + atan2(iqs, ids)`` measured
    counter-clockwise from alpha, which this maps onto that convention.
    """
    return (0.5 * math.pi - theta_a - math.atan2(iqs_ref, ids_ref)) % TWO_PI


def current_references(frame: ReferenceFrame):
    """Stator current reference (alpha, beta, x, y) = I*(sin, cos, 0, 0) at ``frame.theta_a``."""
    amp = frame.I_star
    return (amp * math.sin(frame.theta_a), amp * math.cos(frame.theta_a), 0.0, 0.0)


@njit(cache=True)
def _reference_vector(theta_a, ids, iqs, out):
    phase = 0.5 * math.pi - theta_a - math.atan2(iqs, ids)
    amp = math.sqrt(ids * ids + iqs * iqs)
    out[0] = amp * math.sin(phase)
    out[1] = amp * math.cos(phase)
    out[2] = 0.0
    out[3] = 0.0
