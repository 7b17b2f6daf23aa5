"""Pure-Python flow backend (Dormand-Prince 5(4) with projection).

Mirrors the compiled backend in ``_flowcore.pyx``; selected at import
time by :mod:`semitoric.models.engine` when the extension is missing.
Status codes: 0 ok, 1 step-size collapse, 2 time/step cap hit.
"""

from __future__ import annotations

import numpy as np

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)

OK = 0
STEP_COLLAPSE = 1
CAP_HIT = 2


def _step(rhs, z, h):
    k = [rhs(z)]
    for i in range(1, 7):
        k.append(rhs(z + h * (np.stack(k, axis=0).T @ _A[i][: len(k)])))
    karr = np.stack(k, axis=0)
    z5 = z + h * (karr.T @ _B5)
    err = h * (karr.T @ (_B5 - _B4))
    return z5, err


def _error_norm(err, z0, z1, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(z0), np.abs(z1))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def integrate(rhs, project, z0, T, rtol=1e-9, atol=None, max_steps=2_000_000):
    """Flow z0 for time T (signed); returns (z, status, n_steps)."""
    if atol is None:
        atol = rtol * 1e-2
    z = np.array(z0, dtype=float)
    if T == 0.0:
        return z, OK, 0
    t, sign = 0.0, np.sign(T)
    T = abs(T)
    h = min(0.1, T)
    nsteps = 0
    while t < T:
        if nsteps >= max_steps:
            return z, CAP_HIT, nsteps
        h = min(h, T - t)
        z1, err = _step(lambda w: sign * rhs(w), z, h)
        en = _error_norm(err, z, z1, rtol, atol)
        if en <= 1.0:
            t += h
            z = project(z1)
            nsteps += 1
            h *= min(5.0, max(0.2, 0.9 * en ** -0.2)) if en > 0 else 5.0
        else:
            h *= max(0.2, 0.9 * en ** -0.2)
            if h < 1e-14 * max(1.0, t):
                return z, STEP_COLLAPSE, nsteps
    return z, OK, nsteps


def advance_to_event(
    rhs,
    project,
    section,
    z0,
    target,
    direction,
    t_skip,
    t_max,
    rtol=1e-9,
    atol=None,
    max_steps=2_000_000,
    time_tol=1e-10,
):
    """Integrate forward until ``section(z)`` crosses ``target`` in the
    given direction (+1 increasing, -1 decreasing).  The detector arms
    only after ``t_skip``, so a seed sitting exactly on the section does
    not trigger at t=0.  Returns (t_event, z_event, status)."""
    if atol is None:
        atol = rtol * 1e-2
    z = np.array(z0, dtype=float)
    t = 0.0
    h = 0.05
    if t_skip > 0.0:
        z, st, _ = integrate(rhs, project, z, t_skip, rtol, atol, max_steps)
        if st != OK:
            return t_skip, z, st
        t = t_skip
    s_prev = section(z) - target
    nsteps = 0
    while t < t_max:
        if nsteps >= max_steps:
            return t, z, CAP_HIT
        h = min(h, t_max - t)
        z1, err = _step(rhs, z, h)
        en = _error_norm(err, z, z1, rtol, atol)
        if en > 1.0:
            h *= max(0.2, 0.9 * en ** -0.2)
            if h < 1e-14 * max(1.0, t):
                return t, z, STEP_COLLAPSE
            continue
        z1 = project(z1)
        s_new = section(z1) - target
        crossed = (
            s_prev * s_new < 0.0 or (s_new == 0.0 and s_prev != 0.0)
        ) and (s_new - s_prev) * direction > 0.0
        if crossed:
            # bisect inside [t, t+h], re-integrating from the step start
            t_lo, t_hi = 0.0, h
            z_base = z
            z_hi = z1
            for _ in range(200):
                if t_hi - t_lo <= time_tol * max(1.0, t + t_hi):
                    break
                t_mid = 0.5 * (t_lo + t_hi)
                z_mid, st, _ = integrate(
                    rhs, project, z_base, t_mid - t_lo, rtol, atol, max_steps
                )
                if st != OK:
                    return t + t_mid, z_mid, st
                s_mid = section(z_mid) - target
                if s_prev * s_mid < 0.0 or s_mid == 0.0:
                    t_hi, z_hi = t_mid, z_mid
                else:
                    t_lo, z_base = t_mid, z_mid
                    s_prev = s_mid
            return t + t_hi, z_hi, OK
        t += h
        z = z1
        s_prev = s_new
        nsteps += 1
        h *= min(5.0, max(0.2, 0.9 * en ** -0.2)) if en > 0 else 5.0
    return t, z, CAP_HIT
