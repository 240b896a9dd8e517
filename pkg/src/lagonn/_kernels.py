"""Compiled inner loops for the oscillator integrator.

These mirror the vectorized numpy functions in :mod:`lagonn.lagrange` and
:mod:`lagonn.integrator` term for term; the test-suite cross-checks them.
The state vector ``y`` stacks the N variable phases and the M Lagrange phases.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

# advance() status codes
RUNNING = 0
SOLVED = 1
BUDGET = 2
STALLED = 3
NONFINITE = 4

TWO_PI = 2.0 * math.pi


@njit(cache=True)
def shil_amplitude(t, k_max, start, ramp):
    if k_max == 0.0 or t < start:
        return 0.0
    if ramp == 0.0:
        return k_max
    return k_max * min(1.0, (t - start) / ramp)


@njit(cache=True)
def rhs(y, t, n, vars_, coef, params, onn_only, out):
    """Phase velocities of the saddle-seeking dynamics, written into ``out``.

    ``params`` = (tau, tau_lambda, k_max, shil_start, shil_ramp, freeze_at).
    """
    tau, tau_l, k_max, s_start, s_ramp, freeze_at = (
        params[0], params[1], params[2], params[3], params[4], params[5],
    )
    m_count = vars_.shape[0]
    ev = np.empty(n, dtype=np.complex128)
    for j in range(n):
        ev[j] = complex(math.cos(y[j]), math.sin(y[j]))
        out[j] = 0.0
    lam_active = (not onn_only) and t < freeze_at
    for m in range(m_count):
        ex = ev[vars_[m, 0]]
        ey = ev[vars_[m, 1]]
        ez = ev[vars_[m, 2]]
        c = coef[m]
        exy = ex * ey.conjugate()
        exz = ex * ez.conjugate()
        ezy = ez * ey.conjugate()
        exyz = exy * ez
        wx = c[1] * exy + c[2] * exz + c[4] * ex + c[7] * exyz
        wy = -c[1] * exy - c[3] * ezy + c[5] * ey - c[7] * exyz
        wz = -c[2] * exz + c[3] * ezy + c[6] * ez + c[7] * exyz
        if onn_only:
            # u = (1, 0): only Re(dZ) = Re(i w) = -Im(w) survives
            out[vars_[m, 0]] -= wx.imag
            out[vars_[m, 1]] -= wy.imag
            out[vars_[m, 2]] -= wz.imag
            out[n + m] = 0.0
            continue
        lam = y[n + m]
        rot = complex(math.cos(lam), -math.sin(lam))
        # Re(i w rot) = -Im(w rot)
        out[vars_[m, 0]] -= (wx * rot).imag
        out[vars_[m, 1]] -= (wy * rot).imag
        out[vars_[m, 2]] -= (wz * rot).imag
        if lam_active:
            z = c[0] + c[1] * exy + c[2] * exz + c[3] * ezy + c[4] * ex + c[5] * ey + c[6] * ez + c[7] * exyz
            out[n + m] = (z * rot).imag / tau_l
        else:
            out[n + m] = 0.0
    k = shil_amplitude(t, k_max, s_start, s_ramp)
    for j in range(n):
        out[j] = -(out[j] + 2.0 * k * math.sin(2.0 * y[j])) / tau


@njit(cache=True)
def kappa(y, vars_, negated, beta):
    total = 0.0
    for m in range(vars_.shape[0]):
        prod = 1.0
        for p in range(3):
            s = math.tanh(beta * math.cos(y[vars_[m, p]]))
            if negated[m, p]:
                prod *= 0.5 * (1.0 + s)
            else:
                prod *= 0.5 * (1.0 - s)
        total += prod
    return total


@njit(cache=True)
def lagrange_value(y, n, vars_, coef):
    total = 0.0
    for m in range(vars_.shape[0]):
        ex = complex(math.cos(y[vars_[m, 0]]), math.sin(y[vars_[m, 0]]))
        ey = complex(math.cos(y[vars_[m, 1]]), math.sin(y[vars_[m, 1]]))
        ez = complex(math.cos(y[vars_[m, 2]]), math.sin(y[vars_[m, 2]]))
        c = coef[m]
        exy = ex * ey.conjugate()
        z = (c[0] + c[1] * exy + c[2] * ex * ez.conjugate() + c[3] * ez * ey.conjugate()
             + c[4] * ex + c[5] * ey + c[6] * ez + c[7] * exy * ez)
        lam = y[n + m]
        total += (z * complex(math.cos(lam), -math.sin(lam))).real
    return total


@njit(cache=True)
def quantize(y, n_states):
    step = TWO_PI / n_states
    for i in range(y.shape[0]):
        k = np.rint(y[i] / step) % n_states
        y[i] = k * step


@njit(cache=True)
def fehlberg(y, t, dt, n, vars_, coef, params, onn_only, y_new, f1, f2, f3, tmp):
    """One predictor/corrector step; returns the local error estimate.

    Expects ``f1`` to already hold the derivative at (y, t).
    """
    size = y.shape[0]
    for i in range(size):
        tmp[i] = y[i] + dt * f1[i]
    rhs(tmp, t + dt, n, vars_, coef, params, onn_only, f2)
    for i in range(size):
        tmp[i] = y[i] + dt * (f1[i] + f2[i]) / 4.0
    rhs(tmp, t + 0.5 * dt, n, vars_, coef, params, onn_only, f3)
    err = 0.0
    for i in range(size):
        pred = y[i] + dt * (f1[i] + f2[i]) / 2.0
        y_new[i] = y[i] + dt * (f1[i] + f2[i] + 4.0 * f3[i]) / 6.0
        d = pred - y_new[i]
        err += d * d
    return math.sqrt(err / size)


@njit(cache=True)
def adapt(dt, err, eps, dt_min, dt_max):
    if err == 0.0:
        return min(2.0 * dt, dt_max), True
    gamma = math.sqrt(dt * eps / err)
    dt_next = min(max(0.9 * dt * gamma, dt_min), dt_max)
    return dt_next, gamma >= 1.0


@njit(cache=True)
def advance(y, t, dt, steps, t_max, max_steps, eps, n_states, stop_on_solve, fp_tol,
            n, vars_, coef, negated, params, beta, onn_only, dt_fixed, min_cost):
    """Integrate in place until solved, stalled, out of budget or ``max_steps`` taken.

    Fixed-step mode (``eps <= 0``) computes time as ``steps * dt_fixed`` so that
    trajectories do not depend on how the run is chunked. A step is only taken
    when it ends at or before ``t_max``.

    Returns (status, t, dt, steps, kappa, min_kappa, rejected_steps).
    """
    size = y.shape[0]
    f1 = np.empty(size)
    f2 = np.empty(size)
    f3 = np.empty(size)
    tmp = np.empty(size)
    y_new = np.empty(size)
    k_max, s_start, s_ramp = params[2], params[3], params[4]
    cost = kappa(y, vars_, negated, beta)
    rejected = 0
    taken = 0
    while taken < max_steps:
        if eps <= 0.0:
            dt = dt_fixed
            t_next = (steps + 1) * dt_fixed
        else:
            t_next = t + dt
        if t_next > t_max + 1e-9:
            return BUDGET, t, dt, steps, cost, min_cost, rejected
        rhs(y, t, n, vars_, coef, params, onn_only, f1)
        autonomous = k_max == 0.0 or t >= s_start + s_ramp
        if fp_tol > 0.0 and autonomous:
            biggest = 0.0
            for i in range(size):
                biggest = max(biggest, abs(f1[i]))
            if biggest < fp_tol:
                return STALLED, t, dt, steps, cost, min_cost, rejected
        err = fehlberg(y, t, dt, n, vars_, coef, params, onn_only, y_new, f1, f2, f3, tmp)
        if eps > 0.0:
            dt_next, accept = adapt(dt, err, eps, 1e-6, 1.0)
            if not accept and dt > 1e-6:
                dt = dt_next
                rejected += 1
                continue
        else:
            dt_next = dt_fixed
        for i in range(size):
            if not math.isfinite(y_new[i]):
                return NONFINITE, t, dt, steps, cost, min_cost, rejected
        if n_states > 0:
            quantize(y_new, n_states)
            same = True
            for i in range(size):
                if y_new[i] != y[i]:
                    same = False
                    break
            if same and autonomous and eps <= 0.0:
                return STALLED, t, dt, steps, cost, min_cost, rejected
        for i in range(size):
            y[i] = y_new[i]
        steps += 1
        taken += 1
        t = t_next if eps <= 0.0 else t + dt
        dt = dt_next
        cost = kappa(y, vars_, negated, beta)
        min_cost = min(min_cost, cost)
        if stop_on_solve and cost < 0.125:
            return SOLVED, t, dt, steps, cost, min_cost, rejected
    return RUNNING, t, dt, steps, cost, min_cost, rejected
