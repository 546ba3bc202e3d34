"""Compiled per-sample control loop.

One call advances ``n`` control periods.  All state lives in the arrays that
are passed in and is updated in place, so the Python side can stop between
calls (block boundaries, scheduled weight steps) without losing anything.

Order inside a period k: measure -> backtrack G -> speed PI (decimated) ->
references -> two-step selection of u(k+1) -> log -> apply u(k) over Ts.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from .cost import _popcount, _select
from .machine import _integrate
from .outer_loop import _pi_update, _reference_vector
from .predictor import _model_coefficients

# ctrl (float64) layout
C_THETA, C_SPEED_INTEG, C_IQS, C_OMEGA_MODEL, C_MODEL_VALID = range(5)
CTRL_SIZE = 5
# ustate (int64) layout
U_APPLIED, U_PREV, U_HAS_PRED = range(3)
# opts (float64) layout
(O_IDS, O_TAU_R, O_KP, O_KI, O_IQS_MAX, O_DECIM, O_SUBSTEPS, O_ROTOR_ON,
 O_METHOD, O_G_ALPHA, O_REBUILD) = range(11)
OPTS_SIZE = 11
# per-sample log columns
(L_REF_A, L_REF_B, L_REF_X, L_REF_Y, L_I_A, L_I_B, L_I_X, L_I_Y, L_J, L_OMEGA,
 L_OMEGA_E, L_IQS, L_OMEGA_REF, L_G_A, L_G_B, L_G_X, L_G_Y) = range(17)
LOG_COLS = 17


@njit(cache=True)
def run_samples(k0, n, x, ctrl, ustate, pred, G, p, opts, speed_ref, t_load,
                lam_xy, lam_sc, vtable, flog, u_log, sel_log, sc_log):
    """Advance ``n`` periods starting at global sample ``k0``.

    ``speed_ref``/``t_load`` are indexed by global sample; logs likewise.
    Returns -1 on success or the global index of the first non-finite state.
    """
    Ts = p[8]
    poles = p[6]
    ids = opts[O_IDS]
    tau_r = opts[O_TAU_R]
    decim = int(opts[O_DECIM])
    substeps = int(opts[O_SUBSTEPS])
    rotor_on = opts[O_ROTOR_ON] > 0.5
    method = int(opts[O_METHOD])
    g_alpha = opts[O_G_ALPHA]
    rebuild = opts[O_REBUILD]

    meas = np.empty(4)
    ref = np.empty(4)
    ref2 = np.empty(4)
    i1 = np.empty(4)
    base = np.empty(4)
    v = np.empty(4)
    table = np.empty((32, 4))

    a = 0.0
    b = 0.0
    c = 0.0
    g_ab = 0.0
    g_xy = 0.0
    have_coeffs = False

    for j in range(n):
        k = k0 + j
        for i in range(4):
            meas[i] = x[i]
        omega = x[6]

        if ustate[U_HAS_PRED] == 1:
            for i in range(4):
                G[i] = g_alpha * (meas[i] - pred[i]) + (1.0 - g_alpha) * G[i]

        if k % decim == 0:
            e = speed_ref[k] - omega
            iqs, integ = _pi_update(opts[O_KP], opts[O_KI], ctrl[C_SPEED_INTEG], e,
                                    decim * Ts, -opts[O_IQS_MAX], opts[O_IQS_MAX], True)
            ctrl[C_IQS] = iqs
            ctrl[C_SPEED_INTEG] = integ
        iqs = ctrl[C_IQS]
        omega_e = (iqs / ids) / tau_r + poles * omega
        theta = ctrl[C_THETA]
        _reference_vector(theta, ids, iqs, ref)
        _reference_vector(theta + 2.0 * Ts * omega_e, ids, iqs, ref2)

        if (not have_coeffs) or ctrl[C_MODEL_VALID] < 0.5 or abs(omega - ctrl[C_OMEGA_MODEL]) > rebuild:
            ctrl[C_OMEGA_MODEL] = omega
            ctrl[C_MODEL_VALID] = 1.0
            a, b, c, g_ab, g_xy = _model_coefficients(omega, p)
            for u in range(32):
                table[u, 0] = g_ab * vtable[u, 0]
                table[u, 1] = g_ab * vtable[u, 1]
                table[u, 2] = g_xy * vtable[u, 2]
                table[u, 3] = g_xy * vtable[u, 3]
            have_coeffs = True

        u_app = ustate[U_APPLIED]
        i1[0] = a * meas[0] + b * meas[1] + table[u_app, 0]
        i1[1] = -b * meas[0] + a * meas[1] + table[u_app, 1]
        i1[2] = c * meas[2] + table[u_app, 2]
        i1[3] = c * meas[3] + table[u_app, 3]
        base[0] = a * i1[0] + b * i1[1] + G[0]
        base[1] = -b * i1[0] + a * i1[1] + G[1]
        base[2] = c * i1[2] + G[2]
        base[3] = c * i1[3] + G[3]
        u_next, J, _sc_next = _select(base, ref2, table, u_app, lam_xy, lam_sc)

        for i in range(4):
            pred[i] = i1[i]
        ustate[U_HAS_PRED] = 1

        flog[k, L_REF_A] = ref[0]
        flog[k, L_REF_B] = ref[1]
        flog[k, L_REF_X] = ref[2]
        flog[k, L_REF_Y] = ref[3]
        flog[k, L_I_A] = meas[0]
        flog[k, L_I_B] = meas[1]
        flog[k, L_I_X] = meas[2]
        flog[k, L_I_Y] = meas[3]
        flog[k, L_J] = J
        flog[k, L_OMEGA] = omega
        flog[k, L_OMEGA_E] = omega_e
        flog[k, L_IQS] = iqs
        flog[k, L_OMEGA_REF] = speed_ref[k]
        flog[k, L_G_A] = G[0]
        flog[k, L_G_B] = G[1]
        flog[k, L_G_X] = G[2]
        flog[k, L_G_Y] = G[3]
        u_log[k] = u_app
        sel_log[k] = u_next
        sc_log[k] = _popcount(u_app ^ ustate[U_PREV])

        for i in range(4):
            v[i] = vtable[u_app, i]
        xn = _integrate(x, v, p, t_load[k], Ts, substeps, rotor_on, method)
        for i in range(7):
            if not math.isfinite(xn[i]):
                return k
            x[i] = xn[i]

        theta = (theta + omega_e * Ts) % (2.0 * math.pi)
        if theta >= 2.0 * math.pi:
            theta = 0.0
        ctrl[C_THETA] = theta
        ustate[U_PREV] = u_app
        ustate[U_APPLIED] = u_next
    return -1
