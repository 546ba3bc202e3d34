"""Two-level five-leg inverter: switching states, plane voltages and switch counting.

States are indexed 0..31 with leg a in the least significant bit.  The
exhaustive search in the cost selector walks this order, so the lowest index
wins ties.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .machine import CLARKE

N_STATES = 32
N_LEGS = 5


def state_bits(index: int) -> tuple:
    if not 0 <= index < N_STATES:
        raise ValueError(f"inverter state index out of range: {index}")
    return tuple((index >> leg) & 1 for leg in range(N_LEGS))


def state_index(u) -> int:
    u = tuple(int(k) for k in u)
    if len(u) != N_LEGS or any(k not in (0, 1) for k in u):
        raise ValueError(f"inverter state must be five 0/1 values, got {u}")
    return sum(k << leg for leg, k in enumerate(u))


def enumerate_states() -> list:
    """All 32 leg-switch vectors (Ka..Ke), ordered by binary index."""
    return [state_bits(i) for i in range(N_STATES)]


def phase_voltages(u, Vdc: float) -> np.ndarray:
    """Phase-to-neutral voltages of a star-connected, isolated-neutral load."""
    K = np.asarray(u, dtype=np.float64)
    return Vdc * (K - K.mean())


def state_voltages(u, Vdc: float):
    """Return ((v_alpha, v_beta), (v_x, v_y)) produced by state ``u``."""
    a, b, x, y, _ = CLARKE @ phase_voltages(u, Vdc)
    return (float(a), float(b)), (float(x), float(y))


@lru_cache(maxsize=16)
def _voltage_table(Vdc: float) -> np.ndarray:
    bits = np.array(enumerate_states(), dtype=np.float64)
    ph = Vdc * (bits - bits.mean(axis=1, keepdims=True))
    table = (CLARKE[:4] @ ph.T).T
    table.setflags(write=False)
    return table


def voltage_table(Vdc: float) -> np.ndarray:
    """(32, 4) array of (v_alpha, v_beta, v_x, v_y) for every state index."""
    return _voltage_table(float(Vdc))


def switch_changes(u_prev, u_next) -> int:
    """Number of legs that commute between two states (Hamming distance)."""
    if isinstance(u_prev, (int, np.integer)) and isinstance(u_next, (int, np.integer)):
        return bin(int(u_prev) ^ int(u_next)).count("1")
    return sum(int(a) != int(b) for a, b in zip(u_prev, u_next, strict=True))


SWITCH_TABLE = np.array([[switch_changes(i, j) for j in range(N_STATES)]
                         for i in range(N_STATES)], dtype=np.int64)
