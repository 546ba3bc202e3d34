"""Cost function and exhaustive argmin over the inverter states."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .predictor import DiscreteModel, predict_one_step
from .vsi import N_STATES


@dataclass(frozen=True)
class WeightVector:
    lambda_xy: float
    lambda_sc: float

    def __post_init__(self):
        if self.lambda_xy < 0 or self.lambda_sc < 0:
            raise ValueError(f"weights must be non-negative: {self}")

    def clip(self, xy_bounds, sc_bounds) -> "WeightVector":
        return WeightVector(min(max(self.lambda_xy, xy_bounds[0]), xy_bounds[1]),
                            min(max(self.lambda_sc, sc_bounds[0]), sc_bounds[1]))


@dataclass(frozen=True)
class SelectionResult:
    u_opt: int
    J_opt: float
    sc: int


def cost(e_ab_pred, e_xy_pred, sc: int, w: WeightVector) -> float:
    return (e_ab_pred[0] ** 2 + e_ab_pred[1] ** 2
            + w.lambda_xy * (e_xy_pred[0] ** 2 + e_xy_pred[1] ** 2)
            + w.lambda_sc * sc)


@njit(cache=True)
def _popcount(v):
    n = 0
    while v:
        n += v & 1
        v >>= 1
    return n


@njit(cache=True)
def _select(base, ref, input_table, u_applied, lam_xy, lam_sc):
    # base = Phi @ i(k+1) + G; candidates only add their input column
    best = 0
    best_J = np.inf
    best_sc = 0
    for u in range(32):
        ea = ref[0] - base[0] - input_table[u, 0]
        eb = ref[1] - base[1] - input_table[u, 1]
        ex = ref[2] - base[2] - input_table[u, 2]
        ey = ref[3] - base[3] - input_table[u, 3]
        sc = _popcount(u ^ u_applied)
        J = ea * ea + eb * eb + lam_xy * (ex * ex + ey * ey) + lam_sc * sc
        if J < best_J:
            best = u
            best_J = J
            best_sc = sc
    return best, best_J, best_sc


def select(ref_k2, is_k, u_applied: int, model: DiscreteModel, G, w: WeightVector) -> SelectionResult:
    """Pick the state for period k+1 minimising the two-step predicted cost.

    Ties resolve to the lowest state index.
    """
    assert model.input_table.shape[0] == N_STATES
    i1 = predict_one_step(is_k, u_applied, model)
    base = model.Phi @ i1 + np.asarray(G, dtype=np.float64)
    u, J, sc = _select(base, np.asarray(ref_k2, dtype=np.float64), model.input_table,
                       int(u_applied), float(w.lambda_xy), float(w.lambda_sc))
    return SelectionResult(u_opt=int(u), J_opt=float(J), sc=int(sc))
