"""Controller-side stator current predictor.

The model holds only the four stator currents (alpha, beta, x, y).  It is the
forward-Euler discretisation at Ts of the machine equations with the rotor
currents taken as zero; whatever the rotor actually contributes shows up in
the backtracked residual ``G``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .machine import MachineParams
from .vsi import voltage_table


@dataclass(frozen=True)
class DiscreteModel:
    """``i(k+1) = Phi @ i(k) + Psi @ v(u)``; ``input_table[u] = Psi @ v(u)``."""

    Phi: np.ndarray
    Psi: np.ndarray
    input_table: np.ndarray
    omega: float


@njit(cache=True)
def _model_coefficients(omega, p):
    # p layout follows machine.MachineParams.as_array()
    Rs = p[0]
    Lls = p[2]
    LM = p[4]
    Ls = Lls + LM
    Lr = p[3] + LM
    Ts = p[8]
    det = Ls * Lr - LM * LM
    a = 1.0 - Ts * Lr * Rs / det
    b = Ts * LM * LM * p[6] * omega / det
    c = 1.0 - Ts * Rs / Lls
    g_ab = Ts * Lr / det
    g_xy = Ts / Lls
    return a, b, c, g_ab, g_xy


def build_discrete_model(omega: float, params: MachineParams) -> DiscreteModel:
    a, b, c, g_ab, g_xy = _model_coefficients(float(omega), params.as_array())
    Phi = np.array([[a, b, 0.0, 0.0],
                    [-b, a, 0.0, 0.0],
                    [0.0, 0.0, c, 0.0],
                    [0.0, 0.0, 0.0, c]])
    Psi = np.diag([g_ab, g_ab, g_xy, g_xy])
    table = voltage_table(params.Vdc) @ Psi.T
    return DiscreteModel(Phi=Phi, Psi=Psi, input_table=table, omega=float(omega))


class ModelCache:
    """Rebuilds the discrete model only when speed drifts beyond ``threshold``."""

    def __init__(self, params: MachineParams, threshold: float = 0.0):
        self.params = params
        self.threshold = threshold
        self.model = None

    def get(self, omega: float) -> DiscreteModel:
        if self.model is None or abs(omega - self.model.omega) > self.threshold:
            self.model = build_discrete_model(omega, self.params)
        return self.model


def predict_one_step(is_k, u_k: int, model: DiscreteModel) -> np.ndarray:
    return model.Phi @ np.asarray(is_k, dtype=np.float64) + model.input_table[u_k]


def update_correction(is_meas_k, is_pred_k) -> np.ndarray:
    """Backtracked residual G(k) = measured - predicted at the same instant."""
    return np.asarray(is_meas_k, dtype=np.float64) - np.asarray(is_pred_k, dtype=np.float64)


def predict_two_step(is_k, u_k_applied: int, u_candidate: int, model: DiscreteModel, G) -> np.ndarray:
    i1 = predict_one_step(is_k, u_k_applied, model)
    return model.Phi @ i1 + model.input_table[u_candidate] + np.asarray(G, dtype=np.float64)


def filter_correction(G_prev, G_new, alpha: float) -> np.ndarray:
    """First-order low-pass of G; ``alpha=1`` passes ``G_new`` unchanged."""
    return alpha * np.asarray(G_new) + (1.0 - alpha) * np.asarray(G_prev)
