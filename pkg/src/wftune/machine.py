"""Five-phase induction machine truth plant and the shared coordinate transforms.

The plant keeps rotor currents as explicit states and is integrated with a
fixed-step RK4 (several sub-steps per control period).  State vectors used by
the compiled kernels have the layout given by the ``IS_*``/``IR_*``/``OMEGA``
indices below.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np
from numba import njit

# Compiled-state layout
IS_A, IS_B, IS_X, IS_Y, IR_A, IR_B, OMEGA = range(7)
STATE_SIZE = 7

# Parameter-vector layout for kernels
P_RS, P_RR, P_LLS, P_LLR, P_LM, P_JM, P_POLES, P_VDC, P_TS, P_B = range(10)

#: Amplitude-invariant scaling of the five-phase decoupling transform.
CLARKE_GAIN = 2.0 / 5.0

_GAMMA = 2.0 * math.pi / 5.0


class IntegrationFault(RuntimeError):
    """Raised when the plant state becomes non-finite."""


@dataclass(frozen=True)
class MachineParams:
    """Electrical and mechanical constants of the five-phase machine.

    Defaults are the laboratory machine: 300 V DC link, 30 us sampling,
    no viscous friction.
    """

    Rs: float = 12.85
    Rr: float = 4.80
    Lls: float = 79.93e-3
    Llr: float = 79.93e-3
    LM: float = 681.7e-3
    Jm: float = 0.02
    P: int = 3
    Vdc: float = 300.0
    Ts: float = 30e-6
    B: float = 0.0

    def __post_init__(self):
        for name in ("Rs", "Rr", "Lls", "Llr", "LM", "Jm", "Vdc", "Ts"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"machine.{name} must be positive, got {value!r}")
        if int(self.P) != self.P or self.P < 1:
            raise ValueError(f"machine.P must be an integer >= 1, got {self.P!r}")
        if not (math.isfinite(self.B) and self.B >= 0):
            raise ValueError(f"machine.B must be >= 0, got {self.B!r}")

    @property
    def Ls(self) -> float:
        return self.Lls + self.LM

    @property
    def Lr(self) -> float:
        return self.Llr + self.LM

    @property
    def tau_r(self) -> float:
        """Rotor time constant Lr/Rr (s)."""
        return self.Lr / self.Rr

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=np.float64)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class PlantState:
    """Continuous-truth state of the plant plus the controller's flux angle."""

    is_ab: tuple = (0.0, 0.0)
    is_xy: tuple = (0.0, 0.0)
    ir_ab: tuple = (0.0, 0.0)
    omega: float = 0.0
    theta_a: float = 0.0
    t: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([*self.is_ab, *self.is_xy, *self.ir_ab, self.omega], dtype=np.float64)

    @classmethod
    def from_array(cls, x, theta_a: float = 0.0, t: float = 0.0) -> "PlantState":
        x = np.asarray(x, dtype=np.float64)
        return cls(
            is_ab=(float(x[IS_A]), float(x[IS_B])),
            is_xy=(float(x[IS_X]), float(x[IS_Y])),
            ir_ab=(float(x[IR_A]), float(x[IR_B])),
            omega=float(x[OMEGA]),
            theta_a=theta_a % (2.0 * math.pi),
            t=t,
        )


def _clarke_matrix() -> np.ndarray:
    k = np.arange(5)
    return np.vstack([
        CLARKE_GAIN * np.cos(k * _GAMMA),
        CLARKE_GAIN * np.sin(k * _GAMMA),
        CLARKE_GAIN * np.cos(2 * k * _GAMMA),
        CLARKE_GAIN * np.sin(2 * k * _GAMMA),
        np.full(5, 1.0 / 5.0),
    ])


CLARKE = _clarke_matrix()
CLARKE_INV = np.linalg.inv(CLARKE)


def clarke_5(ph):
    """Decompose five phase quantities (a..e) into ((alpha, beta), (x, y), zero)."""
    ph = np.asarray(ph, dtype=np.float64)
    if ph.shape != (5,):
        raise ValueError(f"expected 5 phase values, got shape {ph.shape}")
    a, b, x, y, z = CLARKE @ ph
    return (float(a), float(b)), (float(x), float(y)), float(z)


def inverse_clarke_5(ab, xy, zero: float = 0.0) -> np.ndarray:
    return CLARKE_INV @ np.array([ab[0], ab[1], xy[0], xy[1], zero], dtype=np.float64)


def park(dq, theta_a: float):
    """Rotate a (d, q) pair with D(theta) = [[cos, sin], [-sin, cos]]."""
    d, q = dq
    c, s = math.cos(theta_a), math.sin(theta_a)
    return (c * d + s * q, -s * d + c * q)


@njit(cache=True)
def _derivative(x, v, p, t_load, rotor_on, out):
    Rs = p[P_RS]
    Rr = p[P_RR]
    Lls = p[P_LLS]
    LM = p[P_LM]
    Ls = Lls + LM
    Lr = p[P_LLR] + LM
    det = Ls * Lr - LM * LM
    isa = x[IS_A]
    isb = x[IS_B]
    if rotor_on:
        ira = x[IR_A]
        irb = x[IR_B]
    else:
        ira = 0.0
        irb = 0.0
    omega = x[OMEGA]
    wr = p[P_POLES] * omega

    # flux equations: Ls*dis + LM*dir = fs ; LM*dis + Lr*dir = fr
    fsa = v[0] - Rs * isa
    fsb = v[1] - Rs * isb
    psi_ra = LM * isa + Lr * ira
    psi_rb = LM * isb + Lr * irb
    fra = -Rr * ira - wr * psi_rb
    frb = -Rr * irb + wr * psi_ra

    out[IS_A] = (Lr * fsa - LM * fra) / det
    out[IS_B] = (Lr * fsb - LM * frb) / det
    if rotor_on:
        out[IR_A] = (Ls * fra - LM * fsa) / det
        out[IR_B] = (Ls * frb - LM * fsb) / det
    else:
        out[IR_A] = 0.0
        out[IR_B] = 0.0
    out[IS_X] = (v[2] - Rs * x[IS_X]) / Lls
    out[IS_Y] = (v[3] - Rs * x[IS_Y]) / Lls

    torque = 2.5 * p[P_POLES] * LM * (isb * ira - isa * irb)
    out[OMEGA] = (torque - t_load - p[P_B] * omega) / p[P_JM]


@njit(cache=True)
def _rk4_step(x, v, p, t_load, dt, substeps, rotor_on):
    h = dt / substeps
    y = x.copy()
    k1 = np.empty(STATE_SIZE)
    k2 = np.empty(STATE_SIZE)
    k3 = np.empty(STATE_SIZE)
    k4 = np.empty(STATE_SIZE)
    tmp = np.empty(STATE_SIZE)
    for _ in range(substeps):
        _derivative(y, v, p, t_load, rotor_on, k1)
        for i in range(STATE_SIZE):
            tmp[i] = y[i] + 0.5 * h * k1[i]
        _derivative(tmp, v, p, t_load, rotor_on, k2)
        for i in range(STATE_SIZE):
            tmp[i] = y[i] + 0.5 * h * k2[i]
        _derivative(tmp, v, p, t_load, rotor_on, k3)
        for i in range(STATE_SIZE):
            tmp[i] = y[i] + h * k3[i]
        _derivative(tmp, v, p, t_load, rotor_on, k4)
        for i in range(STATE_SIZE):
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return y


@njit(cache=True)
def _euler_step(x, v, p, t_load, dt, substeps, rotor_on):
    h = dt / substeps
    y = x.copy()
    k = np.empty(STATE_SIZE)
    for _ in range(substeps):
        _derivative(y, v, p, t_load, rotor_on, k)
        for i in range(STATE_SIZE):
            y[i] += h * k[i]
    return y


INTEGRATORS = {"rk4": 0, "euler": 1}


@njit(cache=True)
def _integrate(x, v, p, t_load, dt, substeps, rotor_on, method):
    if method == 1:
        return _euler_step(x, v, p, t_load, dt, substeps, rotor_on)
    return _rk4_step(x, v, p, t_load, dt, substeps, rotor_on)


def _voltage_vector(v_ab, v_xy) -> np.ndarray:
    return np.array([v_ab[0], v_ab[1], v_xy[0], v_xy[1]], dtype=np.float64)


def plant_derivative(s: PlantState, v_ab, v_xy, params: MachineParams,
                     T_load: float = 0.0, rotor_branch: bool = True) -> np.ndarray:
    """Time derivative of the plant state, in the compiled-state layout.

    With ``rotor_branch=False`` the rotor currents are held at zero, which
    leaves exactly the stator-only model used by the predictor.
    """
    out = np.empty(STATE_SIZE)
    _derivative(s.as_array(), _voltage_vector(v_ab, v_xy), params.as_array(),
                float(T_load), rotor_branch, out)
    return out


def plant_step(s: PlantState, v, dt: float, params: MachineParams, substeps: int = 10,
               T_load: float = 0.0, rotor_branch: bool = True,
               integrator: str = "rk4") -> PlantState:
    """Integrate the plant over ``dt`` with voltages ``v = (v_ab, v_xy)`` held constant."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    v_ab, v_xy = v
    x = _integrate(s.as_array(), _voltage_vector(v_ab, v_xy), params.as_array(),
                   float(T_load), float(dt), int(substeps), rotor_branch,
                   INTEGRATORS[integrator])
    if not np.all(np.isfinite(x)):
        raise IntegrationFault(f"non-finite plant state after t={s.t}")
    return PlantState.from_array(x, theta_a=s.theta_a, t=s.t + dt)


def magnetic_energy(s: PlantState, params: MachineParams) -> float:
    """Energy stored in the machine inductances (J), five-phase amplitude-invariant scaling."""
    isa, isb = s.is_ab
    isx, isy = s.is_xy
    ira, irb = s.ir_ab
    w_ab = (0.5 * params.Ls * (isa ** 2 + isb ** 2) + 0.5 * params.Lr * (ira ** 2 + irb ** 2)
            + params.LM * (isa * ira + isb * irb))
    w_xy = 0.5 * params.Lls * (isx ** 2 + isy ** 2)
    return 2.5 * (w_ab + w_xy)


def magnetized_state(params: MachineParams, ids: float, omega: float,
                     theta: float = 0.0) -> PlantState:
    """No-load synchronous steady state: stator current of amplitude ``ids`` at angle ``theta``, zero rotor current."""
    return PlantState(is_ab=(ids * math.cos(theta), ids * math.sin(theta)), omega=omega)
